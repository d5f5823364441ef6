#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trialsynth/error.hpp"
#include "trialsynth/model.hpp"

namespace trialsynth {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kCorpusKind = "cochrane-corpus";

// Immutable corpus. Build with load_database() or DatabaseSnapshot::from_reviews().
class DatabaseSnapshot {
 public:
  struct Counts {
    std::size_t reviews = 0;
    std::size_t meta_analyses = 0;
    std::size_t studies = 0;
  };

  static DatabaseSnapshot from_reviews(std::vector<Review> reviews) {
    DatabaseSnapshot s;
    s.reviews_ = std::move(reviews);
    s.reindex();
    return s;
  }

  int format_version() const { return kFormatVersion; }
  const std::vector<Review>& reviews() const { return reviews_; }
  Counts counts() const { return counts_; }

  const Review* find_review(std::string_view id) const {
    auto it = review_index_.find(std::string(id));
    return it == review_index_.end() ? nullptr : &reviews_[it->second];
  }

  const MetaAnalysis* find_meta_analysis(std::string_view id) const {
    auto it = ma_index_.find(std::string(id));
    if (it == ma_index_.end()) return nullptr;
    return &reviews_[it->second.first].meta_analyses[it->second.second];
  }

  const Review& review_of(const MetaAnalysis& ma) const { return *find_review(ma.review_id); }

 private:
  void reindex() {
    counts_ = {};
    for (std::size_t r = 0; r < reviews_.size(); ++r) {
      auto& review = reviews_[r];
      if (!review_index_.emplace(review.id, r).second)
        throw ValidationError("duplicate review id '" + review.id + "'");
      ++counts_.reviews;
      for (std::size_t m = 0; m < review.meta_analyses.size(); ++m) {
        auto& ma = review.meta_analyses[m];
        if (ma.review_id.empty()) ma.review_id = review.id;
        if (ma.review_id != review.id)
          throw ValidationError("meta-analysis '" + ma.id + "' refers to review '" + ma.review_id +
                                "' but is stored under '" + review.id + "'");
        if (!ma_index_.emplace(ma.id, std::pair{r, m}).second)
          throw ValidationError("duplicate meta-analysis id '" + ma.id + "'");
        ++counts_.meta_analyses;
        for (const auto& sg : ma.subgroups) counts_.studies += sg.studies.size();
      }
    }
  }

  std::vector<Review> reviews_;
  std::unordered_map<std::string, std::size_t> review_index_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> ma_index_;
  Counts counts_;
};

using SnapshotPtr = std::shared_ptr<const DatabaseSnapshot>;

// Shortest decimal form that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// ---------------------------------------------------------------------------
// JSON-Lines corpus format

namespace corpus_json {

using ojson = nlohmann::ordered_json;

inline ojson study_to_json(const Study& s) {
  ojson j;
  j["label"] = s.label;
  if (const auto* d = std::get_if<DichotomousCounts>(&s.data)) {
    j["dich"] = {{"e1", d->events1}, {"n1", d->total1}, {"e2", d->events2}, {"n2", d->total2}};
  } else if (const auto* c = std::get_if<ContinuousSummaries>(&s.data)) {
    j["cont"] = {{"m1", c->mean1}, {"sd1", c->sd1}, {"n1", c->n1},
                 {"m2", c->mean2}, {"sd2", c->sd2}, {"n2", c->n2}};
  } else {
    const auto& e = std::get<PrecomputedEstimate>(s.data);
    j["est"] = {{"y", e.y}, {"se", e.se}, {"scale", std::string(scale_name(e.scale))}};
  }
  return j;
}

inline ojson review_to_json(const Review& r) {
  ojson j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["year"] = r.year;
  j["topics"] = r.topics;
  j["keywords"] = r.keywords;
  j["meta_analyses"] = ojson::array();
  for (const auto& ma : r.meta_analyses) {
    ojson m;
    m["id"] = ma.id;
    m["name"] = ma.name;
    m["outcome_kind"] = std::string(kind_name(ma.outcome_kind));
    m["group1_label"] = ma.group1_label;
    m["group2_label"] = ma.group2_label;
    m["subgroups"] = ojson::array();
    for (const auto& sg : ma.subgroups) {
      ojson g;
      g["id"] = sg.id;
      g["name"] = sg.name;
      g["studies"] = ojson::array();
      for (const auto& st : sg.studies) g["studies"].push_back(study_to_json(st));
      m["subgroups"].push_back(std::move(g));
    }
    j["meta_analyses"].push_back(std::move(m));
  }
  return j;
}

// Reads fields and reports failures as "path: message".
class Reader {
 public:
  struct Failure {
    std::string path;
    std::string message;
  };

  static const ojson& field(const ojson& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) throw Failure{path, "expected an object"};
    auto it = obj.find(key);
    if (it == obj.end()) throw Failure{join(path, key), "missing field"};
    return *it;
  }

  static std::string str(const ojson& obj, const std::string& path, const char* key) {
    const auto& v = field(obj, path, key);
    if (!v.is_string()) throw Failure{join(path, key), "expected a string"};
    return v.get<std::string>();
  }

  static std::int64_t integer(const ojson& obj, const std::string& path, const char* key) {
    const auto& v = field(obj, path, key);
    if (!v.is_number_integer()) throw Failure{join(path, key), "expected an integer"};
    return v.get<std::int64_t>();
  }

  static double number(const ojson& obj, const std::string& path, const char* key) {
    const auto& v = field(obj, path, key);
    if (!v.is_number()) throw Failure{join(path, key), "expected a number"};
    return v.get<double>();
  }

  static const ojson& array(const ojson& obj, const std::string& path, const char* key) {
    const auto& v = field(obj, path, key);
    if (!v.is_array()) throw Failure{join(path, key), "expected an array"};
    return v;
  }

  static std::vector<std::string> strings(const ojson& obj, const std::string& path, const char* key) {
    std::vector<std::string> out;
    const auto& arr = array(obj, path, key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) throw Failure{index(join(path, key), i), "expected a string"};
      out.push_back(arr[i].get<std::string>());
    }
    return out;
  }

  static std::string join(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
  }
  static std::string index(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
  }
};

inline Study study_from_json(const ojson& j, const std::string& path) {
  using R = Reader;
  Study s;
  s.label = R::str(j, path, "label");
  if (s.label.empty()) throw R::Failure{R::join(path, "label"), "must be non-empty"};
  const int present = static_cast<int>(j.contains("dich")) + static_cast<int>(j.contains("cont")) +
                      static_cast<int>(j.contains("est"));
  if (present != 1) throw R::Failure{path, "exactly one of dich, cont, est is required"};
  if (j.contains("dich")) {
    const auto p = R::join(path, "dich");
    const auto& d = j["dich"];
    DichotomousCounts c{R::integer(d, p, "e1"), R::integer(d, p, "n1"), R::integer(d, p, "e2"),
                        R::integer(d, p, "n2")};
    if (c.events1 < 0) throw R::Failure{p + ".e1", "must be non-negative"};
    if (c.events2 < 0) throw R::Failure{p + ".e2", "must be non-negative"};
    if (c.total1 <= 0) throw R::Failure{p + ".n1", "must be positive"};
    if (c.total2 <= 0) throw R::Failure{p + ".n2", "must be positive"};
    if (c.events1 > c.total1) throw R::Failure{p + ".e1", "events exceed total (e1 > n1)"};
    if (c.events2 > c.total2) throw R::Failure{p + ".e2", "events exceed total (e2 > n2)"};
    s.data = c;
  } else if (j.contains("cont")) {
    const auto p = R::join(path, "cont");
    const auto& d = j["cont"];
    ContinuousSummaries c{R::number(d, p, "m1"), R::number(d, p, "sd1"), R::integer(d, p, "n1"),
                          R::number(d, p, "m2"), R::number(d, p, "sd2"), R::integer(d, p, "n2")};
    if (!(c.sd1 > 0.0)) throw R::Failure{p + ".sd1", "must be positive"};
    if (!(c.sd2 > 0.0)) throw R::Failure{p + ".sd2", "must be positive"};
    if (c.n1 < 2) throw R::Failure{p + ".n1", "must be at least 2"};
    if (c.n2 < 2) throw R::Failure{p + ".n2", "must be at least 2"};
    s.data = c;
  } else {
    const auto p = R::join(path, "est");
    const auto& d = j["est"];
    PrecomputedEstimate e;
    e.y = R::number(d, p, "y");
    e.se = R::number(d, p, "se");
    const auto scale = parse_scale(R::str(d, p, "scale"));
    if (!scale) throw R::Failure{p + ".scale", "unknown scale"};
    e.scale = *scale;
    if (!(e.se > 0.0) || !std::isfinite(e.se)) throw R::Failure{p + ".se", "must be positive"};
    s.data = e;
  }
  return s;
}

inline Review review_from_json(const ojson& j) {
  using R = Reader;
  Review r;
  r.id = R::str(j, "", "id");
  if (r.id.empty()) throw R::Failure{"id", "must be non-empty"};
  r.title = R::str(j, "", "title");
  if (r.title.empty()) throw R::Failure{"title", "must be non-empty"};
  const auto year = R::integer(j, "", "year");
  if (year < 1900 || year > 2100) throw R::Failure{"year", "must lie in [1900, 2100]"};
  r.year = static_cast<int>(year);
  r.topics = R::strings(j, "", "topics");
  r.keywords = R::strings(j, "", "keywords");
  const auto& mas = R::array(j, "", "meta_analyses");
  for (std::size_t m = 0; m < mas.size(); ++m) {
    const auto mp = R::index("meta_analyses", m);
    const auto& mj = mas[m];
    MetaAnalysis ma;
    ma.id = R::str(mj, mp, "id");
    if (ma.id.empty()) throw R::Failure{mp + ".id", "must be non-empty"};
    ma.review_id = mj.contains("review_id") ? R::str(mj, mp, "review_id") : r.id;
    ma.name = R::str(mj, mp, "name");
    const auto kind = R::str(mj, mp, "outcome_kind");
    if (kind == "dich") ma.outcome_kind = OutcomeKind::Dichotomous;
    else if (kind == "cont") ma.outcome_kind = OutcomeKind::Continuous;
    else throw R::Failure{mp + ".outcome_kind", "must be \"dich\" or \"cont\""};
    ma.group1_label = R::str(mj, mp, "group1_label");
    ma.group2_label = R::str(mj, mp, "group2_label");
    const auto& sgs = R::array(mj, mp, "subgroups");
    if (sgs.empty()) throw R::Failure{mp + ".subgroups", "at least one subgroup is required"};
    for (std::size_t g = 0; g < sgs.size(); ++g) {
      const auto gp = R::index(mp + ".subgroups", g);
      Subgroup sg;
      sg.id = R::str(sgs[g], gp, "id");
      sg.name = R::str(sgs[g], gp, "name");
      const auto& studies = R::array(sgs[g], gp, "studies");
      std::set<std::string> labels;
      for (std::size_t s = 0; s < studies.size(); ++s) {
        const auto sp = R::index(gp + ".studies", s);
        auto st = study_from_json(studies[s], sp);
        if (!labels.insert(st.label).second)
          throw R::Failure{sp + ".label", "duplicate study label '" + st.label + "' in subgroup"};
        const bool dich = std::holds_alternative<DichotomousCounts>(st.data);
        const bool cont = std::holds_alternative<ContinuousSummaries>(st.data);
        if ((dich && ma.outcome_kind != OutcomeKind::Dichotomous) ||
            (cont && ma.outcome_kind != OutcomeKind::Continuous))
          throw R::Failure{sp, "study data does not match outcome_kind '" + kind + "'"};
        sg.studies.push_back(std::move(st));
      }
      ma.subgroups.push_back(std::move(sg));
    }
    r.meta_analyses.push_back(std::move(ma));
  }
  return r;
}

}  // namespace corpus_json

inline std::string header_line() {
  corpus_json::ojson h;
  h["format_version"] = kFormatVersion;
  h["kind"] = std::string(kCorpusKind);
  return h.dump();
}

// Canonical serialization: a header line, then one review object per line.
inline std::string serialize_database(const DatabaseSnapshot& snapshot) {
  std::string out = header_line();
  out += '\n';
  for (const auto& r : snapshot.reviews()) {
    out += corpus_json::review_to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline DatabaseSnapshot parse_database(std::istream& in) {
  using corpus_json::ojson;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<Review> reviews;
  std::map<std::string, std::size_t> review_lines, ma_lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError(line_no, "", std::string("invalid JSON: ") + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || !j.contains("format_version"))
        throw LoadError(line_no, "format_version", "missing header line");
      if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kFormatVersion)
        throw LoadError(line_no, "format_version",
                        "unsupported format version " + j["format_version"].dump() +
                            " (supported: " + std::to_string(kFormatVersion) + ")");
      if (!j.contains("kind") || j["kind"] != std::string(kCorpusKind))
        throw LoadError(line_no, "kind", "expected \"" + std::string(kCorpusKind) + "\"");
      have_header = true;
      continue;
    }
    Review r;
    try {
      r = corpus_json::review_from_json(j);
    } catch (const corpus_json::Reader::Failure& f) {
      throw LoadError(line_no, f.path, f.message);
    }
    if (!review_lines.emplace(r.id, line_no).second)
      throw LoadError(line_no, "id", "duplicate review id '" + r.id + "' (first on line " +
                                         std::to_string(review_lines[r.id]) + ")");
    for (std::size_t m = 0; m < r.meta_analyses.size(); ++m) {
      const auto& ma = r.meta_analyses[m];
      if (ma.review_id != r.id)
        throw LoadError(line_no, "meta_analyses[" + std::to_string(m) + "].review_id",
                        "dangling review id '" + ma.review_id + "'");
      if (!ma_lines.emplace(ma.id, line_no).second)
        throw LoadError(line_no, "meta_analyses[" + std::to_string(m) + "].id",
                        "duplicate meta-analysis id '" + ma.id + "'");
    }
    reviews.push_back(std::move(r));
  }
  if (!have_header) throw LoadError(line_no == 0 ? 1 : line_no, "format_version", "missing header line");
  return DatabaseSnapshot::from_reviews(std::move(reviews));
}

inline DatabaseSnapshot parse_database(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_database(in);
}

inline DatabaseSnapshot load_database(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open database file '" + path + "'");
  return parse_database(in);
}

inline void save_database(const DatabaseSnapshot& snapshot, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write database file '" + path + "'");
  out << serialize_database(snapshot);
}

// ---------------------------------------------------------------------------
// Selection

inline Study swap_groups(Study s) {
  if (auto* d = std::get_if<DichotomousCounts>(&s.data)) {
    std::swap(d->events1, d->events2);
    std::swap(d->total1, d->total2);
  } else if (auto* c = std::get_if<ContinuousSummaries>(&s.data)) {
    std::swap(c->mean1, c->mean2);
    std::swap(c->sd1, c->sd2);
    std::swap(c->n1, c->n2);
  } else {
    // No raw data to swap; every supported scale is antisymmetric.
    auto& e = std::get<PrecomputedEstimate>(s.data);
    e.y = -e.y;
  }
  return s;
}

// One StudySet per selection item (or one concatenated set when pooled).
// Corpus studies are re-oriented so the target group sits in position 1;
// overlay studies are taken as entered and appended to every set.
inline std::vector<StudySet> resolve_selection(const DatabaseSnapshot& snapshot,
                                               const Selection& selection) {
  if (selection.items.empty())
    throw ValidationError("selection has no meta-analyses", "selection.items");
  const bool swap = selection.target_group == TargetGroup::Group2;
  std::vector<StudySet> sets;
  for (std::size_t i = 0; i < selection.items.size(); ++i) {
    const auto& item = selection.items[i];
    const std::string path = "selection.items[" + std::to_string(i) + "]";
    const auto* ma = snapshot.find_meta_analysis(item.meta_analysis_id);
    if (!ma)
      throw ValidationError("unknown meta-analysis '" + item.meta_analysis_id + "'",
                            path + ".meta_analysis_id");
    if (item.subgroup_ids) {
      for (const auto& sid : *item.subgroup_ids) {
        const bool known = std::any_of(ma->subgroups.begin(), ma->subgroups.end(),
                                       [&](const Subgroup& g) { return g.id == sid; });
        if (!known)
          throw ValidationError("meta-analysis '" + ma->id + "' has no subgroup '" + sid + "'",
                                path + ".subgroups");
      }
    }
    StudySet set;
    set.name = ma->name;
    set.meta_analysis_ids = {ma->id};
    set.outcome_kind = ma->outcome_kind;
    set.group1_label = swap ? ma->group2_label : ma->group1_label;
    set.group2_label = swap ? ma->group1_label : ma->group2_label;
    for (const auto& sg : ma->subgroups) {
      if (item.subgroup_ids &&
          std::find(item.subgroup_ids->begin(), item.subgroup_ids->end(), sg.id) ==
              item.subgroup_ids->end())
        continue;
      for (const auto& st : sg.studies) set.studies.push_back(swap ? swap_groups(st) : st);
    }
    sets.push_back(std::move(set));
  }

  if (selection.pooled && sets.size() > 1) {
    StudySet pooled;
    pooled.name = "Pooled selection";
    pooled.outcome_kind = sets.front().outcome_kind;
    pooled.group1_label = sets.front().group1_label;
    pooled.group2_label = sets.front().group2_label;
    for (auto& s : sets) {
      if (s.outcome_kind != pooled.outcome_kind)
        throw ValidationError("cannot pool dichotomous and continuous meta-analyses",
                              "selection.pooled");
      if (s.group1_label != pooled.group1_label) pooled.group1_label = "Group 1";
      if (s.group2_label != pooled.group2_label) pooled.group2_label = "Group 2";
      pooled.meta_analysis_ids.push_back(s.meta_analysis_ids.front());
      for (auto& st : s.studies) pooled.studies.push_back(std::move(st));
    }
    sets.clear();
    sets.push_back(std::move(pooled));
  }

  for (std::size_t o = 0; o < selection.overlay.size(); ++o)
    validate_study(selection.overlay[o], "selection.overlay[" + std::to_string(o) + "]");
  for (auto& s : sets) {
    for (auto st : selection.overlay) {
      st.is_new = true;
      s.studies.push_back(std::move(st));
    }
    if (s.studies.empty())
      throw ValidationError("selection of '" + s.name + "' contains no studies", "selection");
  }
  return sets;
}

// ---------------------------------------------------------------------------
// Overlay studies entered by hand: "LABEL:e1/n1,e2/n2" or "LABEL:y±se"
// (also "LABEL:y+-se"). Estimates take the analysis scale.

inline Study parse_overlay(std::string_view text, EffectScale scale) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw ValidationError("added study '" + std::string(text) + "' must look like LABEL:e1/n1,e2/n2 or LABEL:y±se");
  Study s;
  s.label = std::string(text.substr(0, colon));
  s.is_new = true;
  std::string body(text.substr(colon + 1));
  std::erase_if(body, [](char c) { return c == ' '; });
  auto num = [&](std::string_view tok, auto& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw ValidationError("malformed number '" + std::string(tok) + "' in added study '" +
                            s.label + "'");
  };
  std::size_t pm = body.find("±");
  std::size_t pm_len = 2;
  if (pm == std::string::npos) {
    pm = body.find("+-");
    pm_len = 2;
  }
  if (pm != std::string::npos) {
    PrecomputedEstimate e;
    e.scale = scale;
    num(std::string_view(body).substr(0, pm), e.y);
    num(std::string_view(body).substr(pm + pm_len), e.se);
    s.data = e;
  } else {
    const auto comma = body.find(',');
    if (comma == std::string::npos)
      throw ValidationError("added study '" + s.label + "' must look like LABEL:e1/n1,e2/n2 or LABEL:y±se");
    auto pair = [&](std::string_view part, std::int64_t& e, std::int64_t& n) {
      const auto slash = part.find('/');
      if (slash == std::string_view::npos)
        throw ValidationError("added study '" + s.label + "' needs events/total for both groups");
      num(part.substr(0, slash), e);
      num(part.substr(slash + 1), n);
    };
    DichotomousCounts c;
    pair(std::string_view(body).substr(0, comma), c.events1, c.total1);
    pair(std::string_view(body).substr(comma + 1), c.events2, c.total2);
    s.data = c;
  }
  validate_study(s, "overlay");
  return s;
}

// ---------------------------------------------------------------------------
// CSV export / import

inline std::string csv_field(std::string_view v) {
  if (v.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace csv_detail {

inline const std::vector<std::string>& dich_columns() {
  static const std::vector<std::string> c{"events_1", "total_1", "events_2", "total_2"};
  return c;
}
inline const std::vector<std::string>& cont_columns() {
  static const std::vector<std::string> c{"mean_1", "sd_1", "n_1", "mean_2", "sd_2", "n_2"};
  return c;
}
inline const std::vector<std::string>& est_columns() {
  static const std::vector<std::string> c{"y", "se", "scale"};
  return c;
}

}  // namespace csv_detail

// One row per study. The header lists the column block of each data kind
// present: `study,events_1,total_1,events_2,total_2` (dichotomous),
// `study,mean_1,sd_1,n_1,mean_2,sd_2,n_2` (continuous), `study,y,se,scale`
// (precomputed); mixed sets concatenate the blocks, leaving foreign cells empty.
inline std::string export_csv(const std::vector<StudySet>& sets) {
  using namespace csv_detail;
  bool has_dich = false, has_cont = false, has_est = false;
  std::size_t rows = 0;
  for (const auto& set : sets)
    for (const auto& s : set.studies) {
      ++rows;
      has_dich |= std::holds_alternative<DichotomousCounts>(s.data);
      has_cont |= std::holds_alternative<ContinuousSummaries>(s.data);
      has_est |= std::holds_alternative<PrecomputedEstimate>(s.data);
    }
  if (rows == 0) throw ValidationError("nothing to export: the selection has no studies");
  std::string out = "study";
  auto add_header = [&](const std::vector<std::string>& cols) {
    for (const auto& c : cols) out += "," + c;
  };
  if (has_dich) add_header(dich_columns());
  if (has_cont) add_header(cont_columns());
  if (has_est) add_header(est_columns());
  out += "\r\n";
  auto blanks = [&](std::size_t n) { out.append(n, ','); };
  for (const auto& set : sets) {
    for (const auto& s : set.studies) {
      out += csv_field(s.label);
      const auto* d = std::get_if<DichotomousCounts>(&s.data);
      const auto* c = std::get_if<ContinuousSummaries>(&s.data);
      const auto* e = std::get_if<PrecomputedEstimate>(&s.data);
      if (has_dich) {
        if (d) {
          out += "," + std::to_string(d->events1) + "," + std::to_string(d->total1) + "," +
                 std::to_string(d->events2) + "," + std::to_string(d->total2);
        } else {
          blanks(4);
        }
      }
      if (has_cont) {
        if (c) {
          out += "," + format_number(c->mean1) + "," + format_number(c->sd1) + "," +
                 std::to_string(c->n1) + "," + format_number(c->mean2) + "," +
                 format_number(c->sd2) + "," + std::to_string(c->n2);
        } else {
          blanks(6);
        }
      }
      if (has_est) {
        if (e) {
          out += "," + format_number(e->y) + "," + format_number(e->se) + "," +
                 std::string(scale_name(e->scale));
        } else {
          blanks(3);
        }
      }
      out += "\r\n";
    }
  }
  return out;
}

// RFC 4180 record splitting (quoted fields, doubled quotes, CRLF or LF).
inline std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      rec.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      rec.push_back(std::move(field));
      field.clear();
      field_started = false;
      records.push_back(std::move(rec));
      rec.clear();
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted CSV field");
  if (field_started || !rec.empty()) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  return records;
}

// Reads a CSV produced by export_csv (or hand-written with the same columns)
// back into studies.
inline std::vector<Study> import_csv(std::string_view text) {
  const auto records = parse_csv_records(text);
  if (records.empty() || records.front().empty() || records.front().front() != "study")
    throw ValidationError("CSV must start with a header whose first column is 'study'");
  const auto& header = records.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  std::vector<Study> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size())
      throw ValidationError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                            " fields, header has " + std::to_string(header.size()));
    auto cell = [&](const std::string& name) -> std::string_view {
      auto it = col.find(name);
      return it == col.end() ? std::string_view{} : std::string_view(row[it->second]);
    };
    auto present = [&](const std::vector<std::string>& cols) {
      return std::all_of(cols.begin(), cols.end(), [&](const auto& c) { return !cell(c).empty(); });
    };
    auto num = [&](const std::string& name, auto& out_v) {
      const auto v = cell(name);
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out_v);
      if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ValidationError("CSV row " + std::to_string(r + 1) + ": malformed " + name);
    };
    Study s;
    s.label = row[col["study"]];
    if (present(csv_detail::dich_columns())) {
      DichotomousCounts c;
      num("events_1", c.events1);
      num("total_1", c.total1);
      num("events_2", c.events2);
      num("total_2", c.total2);
      s.data = c;
    } else if (present(csv_detail::cont_columns())) {
      ContinuousSummaries c;
      num("mean_1", c.mean1);
      num("sd_1", c.sd1);
      num("n_1", c.n1);
      num("mean_2", c.mean2);
      num("sd_2", c.sd2);
      num("n_2", c.n2);
      s.data = c;
    } else if (present(csv_detail::est_columns())) {
      PrecomputedEstimate e;
      num("y", e.y);
      num("se", e.se);
      const auto scale = parse_scale(cell("scale"));
      if (!scale) throw ValidationError("CSV row " + std::to_string(r + 1) + ": unknown scale");
      e.scale = *scale;
      s.data = e;
    } else {
      throw ValidationError("CSV row " + std::to_string(r + 1) + " carries no complete study data");
    }
    validate_study(s, "csv[" + std::to_string(r + 1) + "]");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace trialsynth

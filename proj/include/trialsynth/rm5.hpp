#pragma once

#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "trialsynth/error.hpp"
#include "trialsynth/model.hpp"

// Reader for the subset of RevMan 5 (rm5) XML that carries raw outcome data:
//
//   <COCHRANE_REVIEW ID=".." YEAR="..">           (YEAR may instead come from MODIFIED="YYYY-..")
//     <COVER_SHEET><TITLE>..</TITLE></COVER_SHEET>
//     <DICH_OUTCOME NAME=".." GROUP_LABEL_1=".." GROUP_LABEL_2="..">
//       <DICH_SUBGROUP NAME="..">                 (optional)
//         <DICH_DATA STUDY_ID=".." EVENTS_1=".." TOTAL_1=".." EVENTS_2=".." TOTAL_2=".."/>
//     <CONT_OUTCOME NAME=".."> / <CONT_SUBGROUP> /
//         <CONT_DATA STUDY_ID=".." MEAN_1 SD_1 TOTAL_1 MEAN_2 SD_2 TOTAL_2/>
//
// Outcomes may be nested in container elements (ANALYSES_AND_DATA, COMPARISON).
// An outcome name may be given as a NAME attribute or a <NAME> child. Every
// other element and attribute, including Cochrane's pooled estimates, is
// ignored. Other outcome kinds (IV_OUTCOME, OTHER_OUTCOME, ...) are skipped
// with a warning.

namespace trialsynth {

struct Rm5Result {
  Review review;
  std::vector<std::string> warnings;
};

namespace rm5_detail {

using boost::property_tree::ptree;

inline const ptree* attributes(const ptree& node) {
  auto it = node.find("<xmlattr>");
  return it == node.not_found() ? nullptr : &it->second;
}

inline std::optional<std::string> attribute(const ptree& node, const char* name) {
  const auto* attrs = attributes(node);
  if (!attrs) return std::nullopt;
  if (auto v = attrs->get_optional<std::string>(name)) return *v;
  return std::nullopt;
}

inline std::string required(const ptree& node, const char* element, const char* name) {
  auto v = attribute(node, name);
  if (!v) throw ValidationError(std::string("<") + element + "> is missing required attribute " + name);
  return *v;
}

template <class T>
T parse_value(const std::string& text, const char* element, const char* name) {
  T v{};
  const char* b = text.data();
  const char* e = text.data() + text.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e || b == e)
    throw ValidationError(std::string("<") + element + "> attribute " + name + " is not a valid number: '" +
                          text + "'");
  return v;
}

template <class T>
T numeric(const ptree& node, const char* element, const char* name) {
  return parse_value<T>(required(node, element, name), element, name);
}

inline std::string study_label(std::string id) {
  if (id.rfind("STD-", 0) == 0) {
    id.erase(0, 4);
    for (char& c : id)
      if (c == '-') c = ' ';
  }
  return id;
}

inline std::string outcome_name(const ptree& node) {
  if (auto n = attribute(node, "NAME")) return *n;
  if (auto child = node.get_optional<std::string>("NAME")) return *child;
  return {};
}

struct Walker {
  Review& review;
  std::vector<std::string>& warnings;

  void outcome(const ptree& node, bool dich) {
    const char* outcome_el = dich ? "DICH_OUTCOME" : "CONT_OUTCOME";
    const char* subgroup_el = dich ? "DICH_SUBGROUP" : "CONT_SUBGROUP";
    const char* data_el = dich ? "DICH_DATA" : "CONT_DATA";
    MetaAnalysis ma;
    const std::size_t index = review.meta_analyses.size() + 1;
    ma.id = review.id + ".ma" + std::to_string(index);
    ma.review_id = review.id;
    ma.name = outcome_name(node);
    if (ma.name.empty()) throw ValidationError(std::string("<") + outcome_el + "> is missing required attribute NAME");
    ma.outcome_kind = dich ? OutcomeKind::Dichotomous : OutcomeKind::Continuous;
    ma.group1_label = attribute(node, "GROUP_LABEL_1").value_or("Group 1");
    ma.group2_label = attribute(node, "GROUP_LABEL_2").value_or("Group 2");

    auto read_rows = [&](const ptree& parent, Subgroup& sg) {
      for (const auto& [tag, child] : parent) {
        if (tag != data_el) continue;
        Study s;
        s.label = study_label(required(child, data_el, "STUDY_ID"));
        if (dich) {
          s.data = DichotomousCounts{numeric<std::int64_t>(child, data_el, "EVENTS_1"),
                                     numeric<std::int64_t>(child, data_el, "TOTAL_1"),
                                     numeric<std::int64_t>(child, data_el, "EVENTS_2"),
                                     numeric<std::int64_t>(child, data_el, "TOTAL_2")};
        } else {
          s.data = ContinuousSummaries{numeric<double>(child, data_el, "MEAN_1"),
                                       numeric<double>(child, data_el, "SD_1"),
                                       numeric<std::int64_t>(child, data_el, "TOTAL_1"),
                                       numeric<double>(child, data_el, "MEAN_2"),
                                       numeric<double>(child, data_el, "SD_2"),
                                       numeric<std::int64_t>(child, data_el, "TOTAL_2")};
        }
        validate_study(s, std::string(data_el) + "[" + s.label + "]");
        for (const auto& existing : sg.studies)
          if (existing.label == s.label)
            throw ValidationError("duplicate study '" + s.label + "' in '" + ma.name + "'");
        sg.studies.push_back(std::move(s));
      }
    };

    for (const auto& [tag, child] : node) {
      if (tag != subgroup_el) continue;
      Subgroup sg;
      sg.id = ma.id + ".sg" + std::to_string(ma.subgroups.size() + 1);
      sg.name = attribute(child, "NAME").value_or(child.get<std::string>("NAME", ""));
      if (sg.name.empty()) throw ValidationError(std::string("<") + subgroup_el + "> is missing required attribute NAME");
      read_rows(child, sg);
      ma.subgroups.push_back(std::move(sg));
    }
    // Rows directly under the outcome form one implicit subgroup.
    Subgroup direct;
    direct.id = ma.id + ".sg" + std::to_string(ma.subgroups.size() + 1);
    direct.name = "All studies";
    read_rows(node, direct);
    if (!direct.studies.empty()) ma.subgroups.push_back(std::move(direct));

    std::erase_if(ma.subgroups, [](const Subgroup& g) { return g.studies.empty(); });
    if (ma.subgroups.empty()) {
      warnings.push_back("outcome '" + ma.name + "' has no study rows; skipped");
      return;
    }
    review.meta_analyses.push_back(std::move(ma));
  }

  void walk(const ptree& node) {
    for (const auto& [tag, child] : node) {
      if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
      if (tag == "DICH_OUTCOME") {
        outcome(child, true);
      } else if (tag == "CONT_OUTCOME") {
        outcome(child, false);
      } else if (tag.size() > 8 && tag.compare(tag.size() - 8, 8, "_OUTCOME") == 0) {
        warnings.push_back("unsupported outcome kind <" + tag + "> '" + outcome_name(child) + "' skipped");
      } else if (tag != "COVER_SHEET") {
        walk(child);
      }
    }
  }
};

}  // namespace rm5_detail

// Parses one review. `fallback_id` names the review when the root element
// carries no ID attribute (typically the file stem).
inline Rm5Result parse_rm5_subset(std::string_view xml_text, std::string fallback_id = "review") {
  using namespace rm5_detail;
  ptree tree;
  try {
    std::istringstream in{std::string(xml_text)};
    boost::property_tree::read_xml(in, tree);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw ValidationError("XML parse error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  auto root_it = tree.find("COCHRANE_REVIEW");
  if (root_it == tree.not_found()) throw ValidationError("root element <COCHRANE_REVIEW> not found");
  const ptree& root = root_it->second;

  Rm5Result out;
  Review& r = out.review;
  r.id = attribute(root, "ID").value_or(std::move(fallback_id));
  r.title = root.get<std::string>("COVER_SHEET.TITLE", "");
  if (r.title.empty()) throw ValidationError("<COVER_SHEET> is missing required element TITLE");
  if (auto year = attribute(root, "YEAR")) {
    r.year = parse_value<int>(*year, "COCHRANE_REVIEW", "YEAR");
  } else if (auto modified = attribute(root, "MODIFIED"); modified && modified->size() >= 4) {
    r.year = parse_value<int>(modified->substr(0, 4), "COCHRANE_REVIEW", "MODIFIED");
  } else {
    throw ValidationError("<COCHRANE_REVIEW> is missing required attribute YEAR");
  }
  if (r.year < 1900 || r.year > 2100)
    throw ValidationError("<COCHRANE_REVIEW> YEAR must lie in [1900, 2100]");
  if (auto cover = root.get_child_optional("COVER_SHEET")) {
    if (auto kws = cover->get_child_optional("KEYWORDS"))
      for (const auto& [tag, kw] : *kws)
        if (tag == "KEYWORD") r.keywords.push_back(kw.data());
    if (auto topics = cover->get_child_optional("TOPICS"))
      for (const auto& [tag, t] : *topics)
        if (tag == "TOPIC") r.topics.push_back(t.data());
  }
  Walker walker{r, out.warnings};
  walker.walk(root);
  return out;
}

}  // namespace trialsynth

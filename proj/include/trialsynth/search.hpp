#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trialsynth/dataset.hpp"
#include "trialsynth/error.hpp"

namespace trialsynth {

enum class FilterMode { Topics, Keywords, Title };

inline std::optional<FilterMode> parse_filter_mode(std::string_view s) {
  if (s == "topics") return FilterMode::Topics;
  if (s == "keywords") return FilterMode::Keywords;
  if (s == "title") return FilterMode::Title;
  return std::nullopt;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Label postings (lowercased label -> sorted review ids) plus lowercased
// titles. Built once per snapshot; read-only afterwards.
class SearchIndex {
 public:
  using Postings = std::map<std::string, std::vector<std::string>>;

  static SearchIndex build(const DatabaseSnapshot& snapshot) {
    SearchIndex idx;
    for (const auto& r : snapshot.reviews()) {
      for (const auto& k : r.keywords) idx.keywords_[to_lower(k)].push_back(r.id);
      for (const auto& t : r.topics) idx.topics_[to_lower(t)].push_back(r.id);
      idx.titles_.emplace(r.id, to_lower(r.title));
    }
    for (auto* postings : {&idx.keywords_, &idx.topics_}) {
      for (auto& [label, ids] : *postings) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      }
    }
    return idx;
  }

  const Postings& keywords() const { return keywords_; }
  const Postings& topics() const { return topics_; }
  const std::map<std::string, std::string>& titles() const { return titles_; }

  // Union over labels for topics/keywords (exact, case-insensitive); for
  // title mode the first query string is a case-insensitive substring.
  std::vector<std::string> filter(FilterMode mode, std::span<const std::string> query) const {
    std::vector<std::string> out;
    if (mode == FilterMode::Title) {
      const std::string needle = query.empty() ? std::string{} : to_lower(query.front());
      for (const auto& [id, title] : titles_)
        if (title.find(needle) != std::string::npos) out.push_back(id);
      return out;
    }
    const auto& postings = mode == FilterMode::Keywords ? keywords_ : topics_;
    for (const auto& label : query) {
      auto it = postings.find(to_lower(label));
      if (it == postings.end()) continue;
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  Postings keywords_;
  Postings topics_;
  std::map<std::string, std::string> titles_;
};

inline SearchIndex build_index(const DatabaseSnapshot& snapshot) { return SearchIndex::build(snapshot); }

inline std::vector<std::string> filter_reviews(const SearchIndex& index, FilterMode mode,
                                               std::span<const std::string> query) {
  return index.filter(mode, query);
}

struct MetaAnalysisListing {
  std::string review_id;
  std::string review_title;
  int review_year = 0;
  std::string meta_analysis_id;
  std::string name;
  std::string outcome_kind;
  std::vector<std::string> subgroup_ids;
  std::vector<std::string> subgroup_names;
  std::string group1_label;
  std::string group2_label;
  std::size_t study_count = 0;
};

// Rows ordered by review id, then meta-analysis id.
inline std::vector<MetaAnalysisListing> list_meta_analyses(const DatabaseSnapshot& snapshot,
                                                           std::span<const std::string> review_ids) {
  std::vector<std::string> ids(review_ids.begin(), review_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<MetaAnalysisListing> rows;
  for (const auto& id : ids) {
    const auto* r = snapshot.find_review(id);
    if (!r) throw NotFoundError("unknown review id '" + id + "'", "review_id");
    std::vector<const MetaAnalysis*> mas;
    for (const auto& ma : r->meta_analyses) mas.push_back(&ma);
    std::sort(mas.begin(), mas.end(), [](auto* a, auto* b) { return a->id < b->id; });
    for (const auto* ma : mas) {
      MetaAnalysisListing row;
      row.review_id = r->id;
      row.review_title = r->title;
      row.review_year = r->year;
      row.meta_analysis_id = ma->id;
      row.name = ma->name;
      row.outcome_kind = std::string(kind_name(ma->outcome_kind));
      for (const auto& sg : ma->subgroups) {
        row.subgroup_ids.push_back(sg.id);
        row.subgroup_names.push_back(sg.name);
        row.study_count += sg.studies.size();
      }
      row.group1_label = ma->group1_label;
      row.group2_label = ma->group2_label;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace trialsynth

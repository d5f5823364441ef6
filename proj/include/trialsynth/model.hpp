#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "trialsynth/error.hpp"

namespace trialsynth {

enum class EffectScale {
  LogOddsRatio,
  PetoLogOddsRatio,
  LogRiskRatio,
  RiskDifference,
  MeanDifference,
  HedgesG,
};

enum class OutcomeKind { Dichotomous, Continuous };

// Short names shared by the corpus file, the CLI and the HTTP API.
inline std::string_view scale_name(EffectScale s) {
  switch (s) {
    case EffectScale::LogOddsRatio: return "logor";
    case EffectScale::PetoLogOddsRatio: return "peto";
    case EffectScale::LogRiskRatio: return "logrr";
    case EffectScale::RiskDifference: return "rd";
    case EffectScale::MeanDifference: return "md";
    case EffectScale::HedgesG: return "g";
  }
  return "";
}

inline std::optional<EffectScale> parse_scale(std::string_view name) {
  for (auto s : {EffectScale::LogOddsRatio, EffectScale::PetoLogOddsRatio,
                 EffectScale::LogRiskRatio, EffectScale::RiskDifference,
                 EffectScale::MeanDifference, EffectScale::HedgesG}) {
    if (scale_name(s) == name) return s;
  }
  return std::nullopt;
}

// Axis label used in tables and plots.
inline std::string_view scale_label(EffectScale s) {
  switch (s) {
    case EffectScale::LogOddsRatio: return "log(OR)";
    case EffectScale::PetoLogOddsRatio: return "log(Peto OR)";
    case EffectScale::LogRiskRatio: return "log(RR)";
    case EffectScale::RiskDifference: return "RD";
    case EffectScale::MeanDifference: return "MD";
    case EffectScale::HedgesG: return "Hedges' g";
  }
  return "";
}

inline bool is_log_scale(EffectScale s) {
  return s == EffectScale::LogOddsRatio || s == EffectScale::PetoLogOddsRatio ||
         s == EffectScale::LogRiskRatio;
}

inline OutcomeKind scale_kind(EffectScale s) {
  return (s == EffectScale::MeanDifference || s == EffectScale::HedgesG)
             ? OutcomeKind::Continuous
             : OutcomeKind::Dichotomous;
}

inline std::string_view kind_name(OutcomeKind k) {
  return k == OutcomeKind::Dichotomous ? "dich" : "cont";
}

struct DichotomousCounts {
  std::int64_t events1 = 0;
  std::int64_t total1 = 0;
  std::int64_t events2 = 0;
  std::int64_t total2 = 0;

  bool operator==(const DichotomousCounts&) const = default;
};

struct ContinuousSummaries {
  double mean1 = 0.0;
  double sd1 = 0.0;
  std::int64_t n1 = 0;
  double mean2 = 0.0;
  double sd2 = 0.0;
  std::int64_t n2 = 0;

  bool operator==(const ContinuousSummaries&) const = default;
};

struct PrecomputedEstimate {
  double y = 0.0;
  double se = 0.0;
  EffectScale scale = EffectScale::LogRiskRatio;

  bool operator==(const PrecomputedEstimate&) const = default;
};

using StudyData = std::variant<DichotomousCounts, ContinuousSummaries, PrecomputedEstimate>;

struct Study {
  std::string label;
  StudyData data;
  // Set for studies supplied by the user rather than the corpus.
  bool is_new = false;

  bool operator==(const Study&) const = default;
};

struct Subgroup {
  std::string id;
  std::string name;
  std::vector<Study> studies;
};

struct MetaAnalysis {
  std::string id;
  std::string review_id;
  std::string name;
  OutcomeKind outcome_kind = OutcomeKind::Dichotomous;
  std::string group1_label;
  std::string group2_label;
  std::vector<Subgroup> subgroups;
};

struct Review {
  std::string id;
  std::string title;
  int year = 0;
  std::vector<std::string> topics;
  std::vector<std::string> keywords;
  std::vector<MetaAnalysis> meta_analyses;
};

enum class TargetGroup { Group1, Group2 };

struct SelectionItem {
  std::string meta_analysis_id;
  // nullopt selects every subgroup; an empty list selects none.
  std::optional<std::vector<std::string>> subgroup_ids;
};

struct Selection {
  std::vector<SelectionItem> items;
  TargetGroup target_group = TargetGroup::Group1;
  bool pooled = false;
  EffectScale scale = EffectScale::LogOddsRatio;
  std::vector<Study> overlay;
};

// Studies ready for effect-size computation, oriented so that the target
// group is in position 1.
struct StudySet {
  std::string name;
  std::vector<std::string> meta_analysis_ids;
  OutcomeKind outcome_kind = OutcomeKind::Dichotomous;
  std::string group1_label;
  std::string group2_label;
  std::vector<Study> studies;
};

inline void validate_study(const Study& s, const std::string& where) {
  if (s.label.empty()) throw ValidationError("study label must be non-empty", where + ".label");
  if (const auto* d = std::get_if<DichotomousCounts>(&s.data)) {
    if (d->events1 < 0 || d->events2 < 0)
      throw ValidationError("event counts must be non-negative", where + ".dich");
    if (d->total1 <= 0 || d->total2 <= 0)
      throw ValidationError("group totals must be positive", where + ".dich");
    if (d->events1 > d->total1) throw ValidationError("events1 exceeds total1", where + ".dich.e1");
    if (d->events2 > d->total2) throw ValidationError("events2 exceeds total2", where + ".dich.e2");
  } else if (const auto* c = std::get_if<ContinuousSummaries>(&s.data)) {
    if (!(c->sd1 > 0.0) || !(c->sd2 > 0.0))
      throw ValidationError("standard deviations must be positive", where + ".cont");
    if (c->n1 < 2 || c->n2 < 2)
      throw ValidationError("group sizes must be at least 2", where + ".cont");
  } else {
    const auto& e = std::get<PrecomputedEstimate>(s.data);
    if (!std::isfinite(e.y)) throw ValidationError("estimate must be finite", where + ".est.y");
    if (!(e.se > 0.0) || !std::isfinite(e.se))
      throw ValidationError("standard error must be positive", where + ".est.se");
  }
}

}  // namespace trialsynth

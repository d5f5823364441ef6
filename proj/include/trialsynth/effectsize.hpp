#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "trialsynth/error.hpp"
#include "trialsynth/model.hpp"

namespace trialsynth {

struct EffectEstimate {
  std::string label;
  double y = 0.0;
  double se = 1.0;
  EffectScale scale = EffectScale::LogOddsRatio;
  bool is_new = false;

  double weight_fe() const { return 1.0 / (se * se); }
};

// Thrown by the single-study estimators when the table carries no information
// on the requested scale. compute_effects() turns it into an exclusion record.
class NonEstimable : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct Exclusion {
  std::string label;
  std::string reason;
};

struct EffectSet {
  std::vector<EffectEstimate> estimates;
  std::vector<Exclusion> exclusions;
};

namespace effectsize {

// 2x2 table in double precision, optionally continuity-corrected.
struct Table {
  double a, b, c, d;
  double n1() const { return a + b; }
  double n2() const { return c + d; }
};

inline Table make_table(const DichotomousCounts& t) {
  return {static_cast<double>(t.events1), static_cast<double>(t.total1 - t.events1),
          static_cast<double>(t.events2), static_cast<double>(t.total2 - t.events2)};
}

inline bool has_zero_cell(const Table& t) { return t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0; }

// Adds 0.5 to every cell iff any cell is zero.
inline Table corrected(const Table& t) {
  if (!has_zero_cell(t)) return t;
  return {t.a + 0.5, t.b + 0.5, t.c + 0.5, t.d + 0.5};
}

inline bool double_zero(const DichotomousCounts& t) { return t.events1 == 0 && t.events2 == 0; }

inline bool double_total(const DichotomousCounts& t) {
  return t.events1 == t.total1 && t.events2 == t.total2;
}

inline void require_ratio_estimable(const DichotomousCounts& t) {
  if (double_zero(t)) throw NonEstimable("no events in either group");
  if (double_total(t)) throw NonEstimable("all participants had events in both groups");
}

}  // namespace effectsize

inline EffectEstimate log_odds_ratio(const DichotomousCounts& counts) {
  effectsize::require_ratio_estimable(counts);
  const auto t = effectsize::corrected(effectsize::make_table(counts));
  EffectEstimate e;
  e.scale = EffectScale::LogOddsRatio;
  e.y = std::log((t.a * t.d) / (t.b * t.c));
  e.se = std::sqrt(1.0 / t.a + 1.0 / t.b + 1.0 / t.c + 1.0 / t.d);
  return e;
}

// One-step (O - E) / V estimator on uncorrected counts.
inline EffectEstimate peto_log_odds_ratio(const DichotomousCounts& counts) {
  const double a = static_cast<double>(counts.events1);
  const double n1 = static_cast<double>(counts.total1);
  const double n2 = static_cast<double>(counts.total2);
  const double n = n1 + n2;
  const double m = a + static_cast<double>(counts.events2);
  if (m == 0.0) throw NonEstimable("no events in either group");
  if (m == n) throw NonEstimable("all participants had events in both groups");
  const double expected = n1 * m / n;
  const double v = n1 * n2 * m * (n - m) / (n * n * (n - 1.0));
  EffectEstimate e;
  e.scale = EffectScale::PetoLogOddsRatio;
  e.y = (a - expected) / v;
  e.se = 1.0 / std::sqrt(v);
  return e;
}

inline EffectEstimate log_risk_ratio(const DichotomousCounts& counts) {
  effectsize::require_ratio_estimable(counts);
  const auto t = effectsize::corrected(effectsize::make_table(counts));
  const double n1 = t.n1();
  const double n2 = t.n2();
  EffectEstimate e;
  e.scale = EffectScale::LogRiskRatio;
  e.y = std::log((t.a / n1) / (t.c / n2));
  e.se = std::sqrt(1.0 / t.a - 1.0 / n1 + 1.0 / t.c - 1.0 / n2);
  return e;
}

inline EffectEstimate risk_difference(const DichotomousCounts& counts) {
  const auto t = effectsize::make_table(counts);
  const double n1 = t.n1();
  const double n2 = t.n2();
  const double p1 = t.a / n1;
  const double p2 = t.c / n2;
  EffectEstimate e;
  e.scale = EffectScale::RiskDifference;
  e.y = p1 - p2;
  double var = p1 * (1.0 - p1) / n1 + p2 * (1.0 - p2) / n2;
  if (var == 0.0) {
    // Both proportions at 0 or 1: corrected cells enter the variance only.
    const double q1 = (t.a + 0.5) / (n1 + 1.0);
    const double q2 = (t.c + 0.5) / (n2 + 1.0);
    var = q1 * (1.0 - q1) / (n1 + 1.0) + q2 * (1.0 - q2) / (n2 + 1.0);
  }
  e.se = std::sqrt(var);
  return e;
}

inline EffectEstimate mean_difference(const ContinuousSummaries& s) {
  EffectEstimate e;
  e.scale = EffectScale::MeanDifference;
  e.y = s.mean1 - s.mean2;
  e.se = std::sqrt(s.sd1 * s.sd1 / static_cast<double>(s.n1) +
                   s.sd2 * s.sd2 / static_cast<double>(s.n2));
  if (!(e.se > 0.0)) throw NonEstimable("zero variance in both groups");
  return e;
}

// Standardized mean difference with the small-sample J correction.
inline EffectEstimate hedges_g(const ContinuousSummaries& s) {
  const double n1 = static_cast<double>(s.n1);
  const double n2 = static_cast<double>(s.n2);
  if (n1 + n2 < 3.0) throw NonEstimable("fewer than three participants");
  const double dof = n1 + n2 - 2.0;
  const double pooled_sd =
      std::sqrt(((n1 - 1.0) * s.sd1 * s.sd1 + (n2 - 1.0) * s.sd2 * s.sd2) / dof);
  if (!(pooled_sd > 0.0)) throw NonEstimable("pooled standard deviation is zero");
  const double d = (s.mean1 - s.mean2) / pooled_sd;
  const double j = 1.0 - 3.0 / (4.0 * dof - 1.0);
  EffectEstimate e;
  e.scale = EffectScale::HedgesG;
  e.y = j * d;
  e.se = std::sqrt(j * j * ((n1 + n2) / (n1 * n2) + d * d / (2.0 * dof)));
  return e;
}

inline EffectEstimate estimate_study(const Study& study, EffectScale scale) {
  EffectEstimate e;
  if (const auto* d = std::get_if<DichotomousCounts>(&study.data)) {
    if (scale_kind(scale) != OutcomeKind::Dichotomous)
      throw ValidationError("study '" + study.label + "' has dichotomous data but scale '" +
                            std::string(scale_name(scale)) + "' needs continuous outcomes");
    switch (scale) {
      case EffectScale::LogOddsRatio: e = log_odds_ratio(*d); break;
      case EffectScale::PetoLogOddsRatio: e = peto_log_odds_ratio(*d); break;
      case EffectScale::LogRiskRatio: e = log_risk_ratio(*d); break;
      default: e = risk_difference(*d); break;
    }
  } else if (const auto* c = std::get_if<ContinuousSummaries>(&study.data)) {
    if (scale_kind(scale) != OutcomeKind::Continuous)
      throw ValidationError("study '" + study.label + "' has continuous data but scale '" +
                            std::string(scale_name(scale)) + "' needs dichotomous outcomes");
    e = scale == EffectScale::MeanDifference ? mean_difference(*c) : hedges_g(*c);
  } else {
    const auto& p = std::get<PrecomputedEstimate>(study.data);
    if (p.scale != scale)
      throw ValidationError("study '" + study.label + "' is a precomputed estimate on scale '" +
                            std::string(scale_name(p.scale)) + "', not '" +
                            std::string(scale_name(scale)) + "'");
    e.y = p.y;
    e.se = p.se;
    e.scale = p.scale;
  }
  e.label = study.label;
  e.is_new = study.is_new;
  return e;
}

// Reduces every study to (y, se); non-estimable studies become exclusion
// records rather than errors.
inline EffectSet compute_effects(const StudySet& set, EffectScale scale) {
  if (scale_kind(scale) != set.outcome_kind)
    throw ValidationError("scale '" + std::string(scale_name(scale)) + "' does not apply to " +
                          (set.outcome_kind == OutcomeKind::Dichotomous ? "dichotomous"
                                                                        : "continuous") +
                          " outcomes of '" + set.name + "'");
  EffectSet out;
  for (const auto& study : set.studies) {
    try {
      out.estimates.push_back(estimate_study(study, scale));
    } catch (const NonEstimable& ex) {
      out.exclusions.push_back({study.label, ex.what()});
    }
  }
  return out;
}

}  // namespace trialsynth

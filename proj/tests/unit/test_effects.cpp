#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "support.hpp"
#include "trialsynth/classical.hpp"
#include "trialsynth/effectsize.hpp"

using namespace trialsynth;

namespace {

EffectEstimate est(double y, double se) {
  EffectEstimate e;
  e.y = y;
  e.se = se;
  return e;
}

DichotomousCounts swapped(const DichotomousCounts& t) { return {t.events2, t.total2, t.events1, t.total1}; }

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Restricted log-likelihood written out independently of the library.
double reml_objective(const std::vector<EffectEstimate>& es, double t) {
  std::vector<double> w;
  for (const auto& e : es) w.push_back(1.0 / (e.se * e.se + t));
  const double sw = std::accumulate(w.begin(), w.end(), 0.0);
  double mu = 0.0;
  for (std::size_t i = 0; i < es.size(); ++i) mu += w[i] * es[i].y / sw;
  double ll = -0.5 * std::log(sw);
  for (std::size_t i = 0; i < es.size(); ++i)
    ll += 0.5 * std::log(w[i]) - 0.5 * w[i] * (es[i].y - mu) * (es[i].y - mu);
  return ll;
}

double grid_reml(const std::vector<EffectEstimate>& es) {
  double best = 0.0, best_ll = -INFINITY;
  for (int i = 0; i <= 100000; ++i) {
    const double t = i * 1e-4;
    const double ll = reml_objective(es, t);
    if (ll > best_ll) {
      best_ll = ll;
      best = t;
    }
  }
  return best;
}

}  // namespace

TEST(EffectSize, SinghLogRiskRatio) {
  const auto e = log_risk_ratio({1, 19, 1, 20});
  EXPECT_NEAR(e.y, std::log(20.0 / 19.0), 1e-15);
  EXPECT_NEAR(e.se, std::sqrt(1.0 - 1.0 / 19 + 1.0 - 1.0 / 20), 1e-15);
  EXPECT_NEAR(e.y - stats::kZ975 * e.se, -2.649, 0.01);
  EXPECT_NEAR(e.y + stats::kZ975 * e.se, 2.751, 0.01);
}

TEST(EffectSize, LogOddsRatioHandValues) {
  const auto e = log_odds_ratio({1, 19, 1, 20});
  EXPECT_NEAR(e.y, 0.0541, 5e-5);
  EXPECT_NEAR(e.se, std::sqrt(1.0 + 1.0 / 18 + 1.0 + 1.0 / 19), 1e-15);
}

TEST(EffectSize, ZeroCellCorrectionOnlyWhenNeeded) {
  // Cells (0, 10, 2, 10).
  const auto e = log_odds_ratio({0, 10, 2, 12});
  EXPECT_NEAR(e.y, std::log(0.5 * 10.5 / (10.5 * 2.5)), 1e-14);
  EXPECT_NEAR(e.se, std::sqrt(1 / 0.5 + 1 / 10.5 + 1 / 2.5 + 1 / 10.5), 1e-14);
  // Cells (0, 10, 5, 10).
  const auto r = log_risk_ratio({0, 10, 5, 15});
  EXPECT_NEAR(r.y, std::log((0.5 / 11.0) / (5.5 / 16.0)), 1e-14);
  EXPECT_NEAR(r.se, std::sqrt(1 / 0.5 - 1 / 11.0 + 1 / 5.5 - 1 / 16.0), 1e-14);
  const auto plain = log_odds_ratio({3, 10, 2, 10});
  EXPECT_NEAR(plain.y, std::log(3.0 * 8 / (7.0 * 2)), 1e-14);
}

TEST(EffectSize, DoubleZeroAndDoubleTotalAreNotEstimableOnRatioScales) {
  EXPECT_THROW(log_odds_ratio({0, 10, 0, 12}), NonEstimable);
  EXPECT_THROW(log_risk_ratio({10, 10, 12, 12}), NonEstimable);
  EXPECT_THROW(peto_log_odds_ratio({0, 5, 0, 5}), NonEstimable);
  const auto rd = risk_difference({0, 10, 0, 12});
  EXPECT_EQ(rd.y, 0.0);
  EXPECT_GT(rd.se, 0.0);
}

TEST(EffectSize, PetoHandValues) {
  const auto e = peto_log_odds_ratio({1, 19, 1, 20});
  const double expected = 19.0 * 2 / 39, v = 19.0 * 20 * 2 * 37 / (39.0 * 39 * 38);
  EXPECT_NEAR(e.y, (1 - expected) / v, 1e-14);
  EXPECT_NEAR(e.y, 0.0527, 5e-5);
  EXPECT_NEAR(e.se, 1.4336, 1e-4);
  EXPECT_EQ(peto_log_odds_ratio({4, 20, 4, 20}).y, 0.0);
}

TEST(EffectSize, RiskDifferenceHandValues) {
  const auto e = risk_difference({1, 19, 1, 20});
  EXPECT_NEAR(e.y, 1.0 / 19 - 1.0 / 20, 1e-15);
  EXPECT_NEAR(e.y, 0.00263, 5e-6);
  EXPECT_NEAR(e.se, std::sqrt((1.0 / 19) * (18.0 / 19) / 19 + (1.0 / 20) * (19.0 / 20) / 20), 1e-15);
}

TEST(EffectSize, ContinuousHandValues) {
  const auto md = mean_difference({2, 2, 4, 0, 2, 4});
  EXPECT_DOUBLE_EQ(md.y, 2.0);
  EXPECT_DOUBLE_EQ(md.se, std::sqrt(2.0));
  const auto g = hedges_g({1, 1, 20, 0, 1, 20});
  const double j = 1.0 - 3.0 / 151.0;
  EXPECT_NEAR(g.y, j, 1e-14);
  EXPECT_NEAR(g.y, 0.9801, 5e-5);
  EXPECT_NEAR(g.se, j * std::sqrt(40.0 / 400.0 + 1.0 / 76.0), 1e-14);
}

TEST(EffectSize, ScaleMismatchIsRejected) {
  StudySet set;
  set.name = "x";
  set.outcome_kind = OutcomeKind::Dichotomous;
  set.studies = {{"a", DichotomousCounts{1, 10, 2, 10}, false}};
  EXPECT_THROW(compute_effects(set, EffectScale::MeanDifference), ValidationError);
  const Study pre{"p", PrecomputedEstimate{0.1, 0.2, EffectScale::LogOddsRatio}, false};
  EXPECT_THROW(estimate_study(pre, EffectScale::LogRiskRatio), ValidationError);
  EXPECT_EQ(estimate_study(pre, EffectScale::LogOddsRatio).y, 0.1);
}

TEST(EffectSize, ExclusionsAreReportedNotDropped) {
  const auto db = testing_support::sample_corpus();
  Selection sel;
  sel.items.push_back({"CD000053.ma1", std::nullopt});
  const auto sets = resolve_selection(db, sel);
  const auto ratio = compute_effects(sets.front(), EffectScale::LogOddsRatio);
  ASSERT_EQ(ratio.exclusions.size(), 1u);
  EXPECT_EQ(ratio.estimates.size() + 1, sets.front().studies.size());
  const auto rd = compute_effects(sets.front(), EffectScale::RiskDifference);
  EXPECT_TRUE(rd.exclusions.empty());
}

TEST(EffectSizeProperties, AntisymmetryUnderGroupSwap) {
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<std::int64_t> total(1, 300);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto n1 = total(rng), n2 = total(rng);
    const DichotomousCounts t{static_cast<std::int64_t>(rng() % (n1 + 1)), n1,
                              static_cast<std::int64_t>(rng() % (n2 + 1)), n2};
    for (auto scale : {EffectScale::LogOddsRatio, EffectScale::PetoLogOddsRatio, EffectScale::LogRiskRatio,
                       EffectScale::RiskDifference}) {
      const Study a{"s", t, false}, b{"s", swapped(t), false};
      std::optional<EffectEstimate> ea, eb;
      try {
        ea = estimate_study(a, scale);
      } catch (const NonEstimable&) {
      }
      try {
        eb = estimate_study(b, scale);
      } catch (const NonEstimable&) {
      }
      ASSERT_EQ(ea.has_value(), eb.has_value());
      if (!ea) continue;
      ASSERT_NEAR(ea->y, -eb->y, 1e-12 * (1 + std::abs(ea->y)));
      ASSERT_NEAR(ea->se, eb->se, 1e-12 * ea->se);
      ASSERT_GT(ea->se, 0.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 35000);

  std::uniform_real_distribution<double> m(-10, 10), sd(0.1, 5);
  for (int i = 0; i < 10000; ++i) {
    const ContinuousSummaries c{m(rng), sd(rng), total(rng) + 1, m(rng), sd(rng), total(rng) + 1};
    const ContinuousSummaries s{c.mean2, c.sd2, c.n2, c.mean1, c.sd1, c.n1};
    for (auto scale : {EffectScale::MeanDifference, EffectScale::HedgesG}) {
      const auto ea = estimate_study({"s", c, false}, scale);
      const auto eb = estimate_study({"s", s, false}, scale);
      ASSERT_NEAR(ea.y, -eb.y, 1e-12 * (1 + std::abs(ea.y)));
      ASSERT_NEAR(ea.se, eb.se, 1e-12 * ea.se);
    }
  }
}

// At a = n1 the zero cell in group 1 triggers the correction of every cell,
// which also moves group 2, so the check stops at n1 - 1.
TEST(EffectSizeProperties, LogRiskRatioIncreasesWithEvents) {
  for (std::int64_t c = 1; c <= 20; c += 3) {
    double prev = -INFINITY;
    for (std::int64_t a = 0; a < 30; ++a) {
      const double y = log_risk_ratio({a, 30, c, 25}).y;
      EXPECT_GT(y, prev);
      prev = y;
    }
  }
}

TEST(EffectSizeProperties, OddsRatioFartherFromNullThanRiskRatio) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t n1 = 2 + rng() % 100, n2 = 2 + rng() % 100;
    const DichotomousCounts t{1 + static_cast<std::int64_t>(rng() % (n1 - 1)), n1,
                              1 + static_cast<std::int64_t>(rng() % (n2 - 1)), n2};
    EXPECT_GE(std::abs(log_odds_ratio(t).y) + 1e-12, std::abs(log_risk_ratio(t).y));
  }
}

TEST(FixedEffect, HandComputedValues) {
  const std::vector<EffectEstimate> one{est(0.5, 0.2)};
  const auto r1 = fixed_effect_iv(one);
  EXPECT_DOUBLE_EQ(r1.y, 0.5);
  EXPECT_DOUBLE_EQ(r1.se, 0.2);
  const std::vector<EffectEstimate> two{est(0, 1), est(2, 1)};
  const auto r2 = fixed_effect_iv(two);
  EXPECT_DOUBLE_EQ(r2.y, 1.0);
  EXPECT_NEAR(r2.se, 0.7071, 5e-5);
  EXPECT_DOUBLE_EQ(r2.z, r2.y / r2.se);
  EXPECT_THROW(fixed_effect_iv({}), ValidationError);
}

TEST(FixedEffect, SinghUpdatedAnalysis) {
  const auto db = testing_support::sample_corpus();
  const auto sets = resolve_selection(db, testing_support::children_selection());
  const auto eff = compute_effects(sets.front(), EffectScale::LogRiskRatio);
  ASSERT_EQ(eff.estimates.size(), 5u);
  const auto r = fixed_effect_iv(eff.estimates);
  double sw = 0, swy = 0;
  for (const auto& e : eff.estimates) {
    sw += 1 / (e.se * e.se);
    swy += e.y / (e.se * e.se);
  }
  EXPECT_NEAR(r.y, swy / sw, 1e-14);
  EXPECT_NEAR(r.se, 1 / std::sqrt(sw), 1e-14);
}

TEST(MantelHaenszel, SingleTableReducesToStudyEstimate) {
  const std::vector<DichotomousCounts> t{{7, 40, 15, 38}};
  const auto rr = mantel_haenszel(t, MHScale::RR).pooled;
  const auto krr = log_risk_ratio(t[0]);
  EXPECT_NEAR(rr.y, krr.y, 1e-14);
  EXPECT_NEAR(rr.se, krr.se, 1e-14);
  const auto orr = mantel_haenszel(t, MHScale::OR).pooled;
  const auto wor = log_odds_ratio(t[0]);
  EXPECT_NEAR(orr.y, wor.y, 1e-14);
  EXPECT_NEAR(orr.se, wor.se, 1e-14);
  const auto rd = mantel_haenszel(t, MHScale::RD).pooled;
  const auto wrd = risk_difference(t[0]);
  EXPECT_NEAR(rd.y, wrd.y, 1e-15);
  EXPECT_NEAR(rd.se, wrd.se, 1e-15);
}

TEST(MantelHaenszel, ReplicationLeavesPointEstimate) {
  const std::vector<DichotomousCounts> one{{3, 20, 9, 21}}, two{{3, 20, 9, 21}, {3, 20, 9, 21}};
  for (auto s : {MHScale::OR, MHScale::RR, MHScale::RD})
    EXPECT_NEAR(mantel_haenszel(one, s).pooled.y, mantel_haenszel(two, s).pooled.y, 1e-14);
}

TEST(MantelHaenszel, CloseToInverseVarianceOnBalancedSet) {
  const std::vector<DichotomousCounts> t{{12, 100, 20, 100}, {15, 120, 24, 118}, {9, 90, 16, 92}, {14, 110, 22, 109}};
  const auto mh = mantel_haenszel(t, MHScale::RR).pooled;
  std::vector<EffectEstimate> es;
  for (const auto& x : t) es.push_back(log_risk_ratio(x));
  const auto iv = fixed_effect_iv(es);
  EXPECT_LT(std::abs(mh.y - iv.y), 0.05 * std::abs(iv.y));
}

TEST(MantelHaenszel, DropsDoubleZeroTables) {
  const std::vector<DichotomousCounts> t{{0, 10, 0, 10}, {2, 10, 4, 10}};
  const std::vector<std::string> labels{"empty", "full"};
  const auto r = mantel_haenszel(t, MHScale::OR, labels);
  ASSERT_EQ(r.exclusions.size(), 1u);
  EXPECT_EQ(r.exclusions[0].label, "empty");
  const std::vector<DichotomousCounts> none{{0, 10, 0, 10}};
  EXPECT_THROW(mantel_haenszel(none, MHScale::RR), ValidationError);
  EXPECT_EQ(mantel_haenszel(t, MHScale::RD).exclusions.size(), 0u);
}

TEST(Heterogeneity, DerSimonianLairdHandValues) {
  const std::vector<EffectEstimate> two{est(0, 1), est(2, 1)};
  const auto h = heterogeneity(two);
  EXPECT_EQ(h.q, 2.0);
  EXPECT_EQ(h.df, 1);
  EXPECT_EQ(h.tau2, 1.0);
  EXPECT_DOUBLE_EQ(h.i2, 50.0);
  EXPECT_DOUBLE_EQ(h.h2, 2.0);
  const std::vector<EffectEstimate> same{est(0.3, 0.2), est(0.3, 0.5), est(0.3, 1)};
  const auto z = heterogeneity(same);
  EXPECT_EQ(z.q, 0.0);
  EXPECT_EQ(z.tau2, 0.0);
  EXPECT_EQ(z.i2, 0.0);
  const std::vector<EffectEstimate> tight{est(0.0, 1), est(0.1, 1), est(-0.1, 1)};
  EXPECT_EQ(heterogeneity(tight).tau2, 0.0);
  const std::vector<EffectEstimate> single{est(1, 1)};
  EXPECT_EQ(heterogeneity(single).p_q, 1.0);
}

TEST(Heterogeneity, MatchesBruteForceSums) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> y(0, 1);
  std::uniform_real_distribution<double> se(0.05, 2);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<EffectEstimate> es;
    const int k = 2 + static_cast<int>(rng() % 12);
    for (int i = 0; i < k; ++i) es.push_back(est(y(rng), se(rng)));
    long double sw = 0, swy = 0;
    for (const auto& e : es) {
      sw += 1.0L / (e.se * e.se);
      swy += e.y / (static_cast<long double>(e.se) * e.se);
    }
    long double q = 0;
    for (const auto& e : es) q += (e.y - swy / sw) * (e.y - swy / sw) / (static_cast<long double>(e.se) * e.se);
    const auto h = heterogeneity(es);
    EXPECT_NEAR(h.q, static_cast<double>(q), 1e-12 * std::max(1.0, static_cast<double>(q)));
    const double i2 = q > k - 1 ? 100.0 * static_cast<double>((q - (k - 1)) / q) : 0.0;
    EXPECT_NEAR(h.i2, i2, 1e-9);
    EXPECT_GE(h.p_q, 0.0);
    EXPECT_LE(h.p_q, 1.0);
  }
}

TEST(Reml, MatchesGridSearchOracle) {
  const std::vector<EffectEstimate> two{est(0, 1), est(2, 1)};
  EXPECT_NEAR(reml_tau2(two), grid_reml(two), 1e-3);
  EXPECT_NEAR(reml_tau2(two), 1.0, 1e-6);
  const std::vector<EffectEstimate> five{est(-0.4, 0.3), est(0.6, 0.25), est(0.1, 0.5), est(1.2, 0.4), est(-0.9, 0.6)};
  EXPECT_NEAR(reml_tau2(five), grid_reml(five), 1e-3);
  const std::vector<EffectEstimate> flat{est(0.2, 0.5), est(0.21, 0.5), est(0.19, 0.4)};
  EXPECT_EQ(reml_tau2(flat), 0.0);
  const std::vector<EffectEstimate> same{est(0.2, 0.5), est(0.2, 0.3)};
  EXPECT_EQ(reml_tau2(same), 0.0);
  EXPECT_THROW(reml_tau2(std::vector<EffectEstimate>{est(0, 1)}), ValidationError);
}

TEST(Reml, IterationCapRaisesNumericalError) {
  const std::vector<EffectEstimate> five{est(-0.4, 0.3), est(0.6, 0.25), est(0.1, 0.5), est(1.2, 0.4), est(-0.9, 0.6)};
  try {
    reml_tau2(five, 3);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_TRUE(std::isfinite(e.last_value()));
  }
}

TEST(Reml, PermutationInvariant) {
  std::vector<EffectEstimate> es{est(-0.4, 0.3), est(0.6, 0.25), est(0.1, 0.5), est(1.2, 0.4), est(-0.9, 0.6)};
  const double ref = reml_tau2(es);
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(es.begin(), es.end(), rng);
    EXPECT_NEAR(reml_tau2(es), ref, 1e-9);
  }
}

TEST(RandomEffects, ZeroTauIsBitwiseFixedEffect) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> y(0, 1);
  std::uniform_real_distribution<double> se(0.05, 2);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<EffectEstimate> es;
    for (int i = 0, k = 1 + static_cast<int>(rng() % 10); i < k; ++i) es.push_back(est(y(rng), se(rng)));
    const auto a = fixed_effect_iv(es), b = random_effects(es, 0.0);
    EXPECT_TRUE(bitwise_equal(a.y, b.y));
    EXPECT_TRUE(bitwise_equal(a.se, b.se));
    EXPECT_TRUE(bitwise_equal(a.ci_low, b.ci_low));
    EXPECT_TRUE(bitwise_equal(a.ci_high, b.ci_high));
    EXPECT_TRUE(bitwise_equal(a.p, b.p));
  }
}

TEST(RandomEffects, LargeTauGivesArithmeticMean) {
  const std::vector<EffectEstimate> es{est(-0.4, 0.3), est(0.6, 0.25), est(0.1, 0.5), est(1.2, 0.04)};
  const double mean = (-0.4 + 0.6 + 0.1 + 1.2) / 4;
  EXPECT_NEAR(random_effects(es, 1e6).y, mean, 1e-3);
  EXPECT_GE(random_effects(es, 0.3).se, fixed_effect_iv(es).se);
  EXPECT_THROW(random_effects(es, -1.0), ValidationError);
  EXPECT_THROW(random_effects(es, NAN), ValidationError);
}

TEST(PooledProperties, ConvexPermutationInvariantAndConsistent) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> y(0, 2);
  std::uniform_real_distribution<double> se(0.05, 2);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<EffectEstimate> es;
    for (int i = 0, k = 1 + static_cast<int>(rng() % 15); i < k; ++i) es.push_back(est(y(rng), se(rng)));
    for (auto m : {PoolingMethod::FixedIV, PoolingMethod::RandomDL, PoolingMethod::RandomREML}) {
      const auto r = pool(es, m);
      const auto [lo, hi] = std::minmax_element(es.begin(), es.end(), [](auto& a, auto& b) { return a.y < b.y; });
      EXPECT_GE(r.y, lo->y - 1e-12);
      EXPECT_LE(r.y, hi->y + 1e-12);
      EXPECT_LT(r.ci_low, r.ci_high);
      EXPECT_GE(r.p, 0.0);
      EXPECT_LE(r.p, 1.0);
      EXPECT_TRUE(r.y == 0.0 || std::signbit(r.z) == std::signbit(r.y));
      EXPECT_NEAR(std::accumulate(r.weight_pct.begin(), r.weight_pct.end(), 0.0), 100.0, 1e-9);
      const auto t = transform(r, EffectScale::LogOddsRatio);
      EXPECT_LT(t.ci_low, t.estimate);
      EXPECT_LT(t.estimate, t.ci_high);
    }
    auto shuffled = es;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_NEAR(fixed_effect_iv(shuffled).y, fixed_effect_iv(es).y, 1e-12);
  }
  EXPECT_THROW(pool(std::vector<EffectEstimate>{est(0, 1)}, PoolingMethod::FixedMH), ValidationError);
}

TEST(Egger, SymmetricFunnelHasZeroIntercept) {
  std::vector<EffectEstimate> es;
  for (double se : {0.1, 0.2, 0.35, 0.5, 0.8}) {
    es.push_back(est(0.3 + 1.5 * se, se));
    es.push_back(est(0.3 - 1.5 * se, se));
  }
  const auto r = egger_test(es);
  EXPECT_LT(std::abs(r.intercept), 1e-10);
  EXPECT_GT(r.p, 0.99);
  EXPECT_EQ(r.df, 8);
}

TEST(Egger, BiasedSetMatchesLeastSquaresOracle) {
  std::vector<EffectEstimate> es;
  const std::vector<double> ses{0.08, 0.1, 0.15, 0.2, 0.3, 0.45, 0.6, 0.8};
  const std::vector<double> noise{0.02, -0.03, 0.04, -0.01, 0.05, -0.02, 0.03, 0.01};
  for (std::size_t i = 0; i < ses.size(); ++i) es.push_back(est(0.1 + (ses[i] > 0.25 ? 1.0 : 0.0) + noise[i], ses[i]));
  const auto r = egger_test(es);
  EXPECT_GT(r.intercept, 0.0);
  EXPECT_LT(r.p, 0.05);

  // Normal equations for z = b0 + b1 x solved by Cramer's rule.
  double n = 0, sx = 0, sxx = 0, sz = 0, sxz = 0;
  for (const auto& e : es) {
    const double x = 1 / e.se, z = e.y / e.se;
    n += 1, sx += x, sxx += x * x, sz += z, sxz += x * z;
  }
  const double det = n * sxx - sx * sx;
  const double b0 = (sxx * sz - sx * sxz) / det, b1 = (n * sxz - sx * sz) / det;
  double rss = 0;
  for (const auto& e : es) rss += std::pow(e.y / e.se - b0 - b1 / e.se, 2);
  const double s2 = rss / (n - 2);
  EXPECT_NEAR(r.intercept, b0, 1e-9 * std::abs(b0));
  EXPECT_NEAR(r.se_intercept, std::sqrt(s2 * sxx / det), 1e-9);
  EXPECT_THROW(egger_test(std::vector<EffectEstimate>{est(0, 1), est(1, 1)}), ValidationError);
}

TEST(Transform, ExponentiatesLogScales) {
  PooledResult r;
  r.y = -0.784;
  r.ci_low = -1.207;
  r.ci_high = -0.361;
  const auto t = transform(r, EffectScale::LogRiskRatio);
  EXPECT_TRUE(t.exponentiated);
  EXPECT_NEAR(t.estimate, 0.457, 0.001);
  EXPECT_NEAR(t.ci_low, 0.299, 0.001);
  EXPECT_NEAR(t.ci_high, 0.697, 0.001);
  const auto same = transform(r, EffectScale::RiskDifference);
  EXPECT_FALSE(same.exponentiated);
  EXPECT_EQ(same.estimate, r.y);
  r.y = 0;
  EXPECT_EQ(transform(r, EffectScale::LogOddsRatio).estimate, 1.0);
}

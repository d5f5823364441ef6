#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "trialsynth/effectsize.hpp"
#include "trialsynth/error.hpp"
#include "trialsynth/model.hpp"
#include "trialsynth/stats.hpp"

namespace trialsynth {

enum class PoolingMethod { FixedIV, FixedMH, RandomDL, RandomREML };

inline std::string_view method_name(PoolingMethod m) {
  switch (m) {
    case PoolingMethod::FixedIV: return "fixed";
    case PoolingMethod::FixedMH: return "mh";
    case PoolingMethod::RandomDL: return "dl";
    case PoolingMethod::RandomREML: return "reml";
  }
  return "";
}

inline std::string_view method_label(PoolingMethod m) {
  switch (m) {
    case PoolingMethod::FixedIV: return "Fixed effect (inverse variance)";
    case PoolingMethod::FixedMH: return "Fixed effect (Mantel-Haenszel)";
    case PoolingMethod::RandomDL: return "Random effects (DerSimonian-Laird)";
    case PoolingMethod::RandomREML: return "Random effects (REML)";
  }
  return "";
}

struct HeterogeneityStats {
  double q = 0.0;
  int df = 0;
  double p_q = 1.0;
  double tau2 = 0.0;  // DerSimonian-Laird moment estimate
  double i2 = 0.0;    // percent
  double h2 = 1.0;
};

struct PooledResult {
  PoolingMethod method = PoolingMethod::FixedIV;
  double y = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double z = 0.0;
  double p = 1.0;
  int k = 0;
  double tau2 = 0.0;  // between-study variance used for the weights
  std::vector<double> weight_pct;
};

struct TransformedResult {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool exponentiated = false;
};

struct EggerResult {
  double intercept = 0.0;
  double se_intercept = 0.0;
  double t = 0.0;
  double p = 1.0;
  int df = 0;
};

namespace classical_detail {

inline void require_nonempty(std::span<const EffectEstimate> est, const char* what) {
  if (est.empty()) throw ValidationError(std::string(what) + " needs at least one estimate");
}

// Wald summaries from a point estimate, its se and per-study raw weights.
inline PooledResult finish(PoolingMethod method, double y, double se, std::span<const double> w,
                           double tau2) {
  PooledResult r;
  r.method = method;
  r.y = y;
  r.se = se;
  r.ci_low = y - stats::kZ975 * se;
  r.ci_high = y + stats::kZ975 * se;
  r.z = y / se;
  r.p = stats::two_sided_normal_p(r.z);
  r.k = static_cast<int>(w.size());
  r.tau2 = tau2;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  r.weight_pct.reserve(w.size());
  for (double wi : w) r.weight_pct.push_back(100.0 * wi / total);
  return r;
}

inline PooledResult weighted(std::span<const EffectEstimate> est, double tau2,
                             PoolingMethod method) {
  std::vector<double> w;
  w.reserve(est.size());
  double sw = 0.0;
  double swy = 0.0;
  for (const auto& e : est) {
    const double wi = 1.0 / (e.se * e.se + tau2);
    w.push_back(wi);
    sw += wi;
    swy += wi * e.y;
  }
  return finish(method, swy / sw, 1.0 / std::sqrt(sw), w, tau2);
}

}  // namespace classical_detail

inline PooledResult fixed_effect_iv(std::span<const EffectEstimate> estimates) {
  classical_detail::require_nonempty(estimates, "fixed-effect pooling");
  return classical_detail::weighted(estimates, 0.0, PoolingMethod::FixedIV);
}

inline PooledResult random_effects(std::span<const EffectEstimate> estimates, double tau2,
                                   PoolingMethod method = PoolingMethod::RandomDL) {
  classical_detail::require_nonempty(estimates, "random-effects pooling");
  if (!(tau2 >= 0.0) || !std::isfinite(tau2))
    throw ValidationError("tau^2 must be a non-negative finite number");
  // tau2 == 0 reduces to exactly the fixed-effect arithmetic.
  return classical_detail::weighted(estimates, tau2, method);
}

inline HeterogeneityStats heterogeneity(std::span<const EffectEstimate> estimates) {
  classical_detail::require_nonempty(estimates, "heterogeneity");
  HeterogeneityStats h;
  h.df = static_cast<int>(estimates.size()) - 1;
  if (h.df == 0) return h;
  double sw = 0.0, sw2 = 0.0, swy = 0.0;
  for (const auto& e : estimates) {
    const double w = e.weight_fe();
    sw += w;
    sw2 += w * w;
    swy += w * e.y;
  }
  const double mean = swy / sw;
  for (const auto& e : estimates) h.q += e.weight_fe() * (e.y - mean) * (e.y - mean);
  h.p_q = stats::chisq_upper_tail(h.q, h.df);
  const double c = sw - sw2 / sw;
  h.tau2 = std::max(0.0, (h.q - h.df) / c);
  h.i2 = h.q > 0.0 ? std::max(0.0, (h.q - h.df) / h.q) * 100.0 : 0.0;
  h.h2 = h.q > 0.0 ? std::max(1.0, h.q / h.df) : 1.0;
  return h;
}

// Restricted log-likelihood of the normal-normal random-effects model.
inline double reml_loglik(std::span<const EffectEstimate> estimates, double tau2) {
  double sw = 0.0, swy = 0.0, slogv = 0.0;
  for (const auto& e : estimates) {
    const double v = e.se * e.se + tau2;
    sw += 1.0 / v;
    swy += e.y / v;
    slogv += std::log(v);
  }
  const double mu = swy / sw;
  double rss = 0.0;
  for (const auto& e : estimates) rss += (e.y - mu) * (e.y - mu) / (e.se * e.se + tau2);
  return -0.5 * slogv - 0.5 * std::log(sw) - 0.5 * rss;
}

// Derivative of reml_loglik with respect to tau^2.
inline double reml_score(std::span<const EffectEstimate> estimates, double tau2) {
  double sw = 0.0, sw2 = 0.0, swy = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / (e.se * e.se + tau2);
    sw += w;
    sw2 += w * w;
    swy += w * e.y;
  }
  const double mu = swy / sw;
  double s = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / (e.se * e.se + tau2);
    s += w * w * (e.y - mu) * (e.y - mu);
  }
  return 0.5 * (s - sw + sw2 / sw);
}

// Maximizes the restricted likelihood over [0, tau2_max] by golden-section
// search refined with parabolic steps (Brent), stopping when the bracket is
// narrower than 1e-8.
inline double reml_tau2(std::span<const EffectEstimate> estimates, int max_iter = 500) {
  if (estimates.size() < 2) throw ValidationError("REML needs at least two estimates");
  const auto n = static_cast<double>(estimates.size());
  double mean = 0.0, mean_v = 0.0;
  for (const auto& e : estimates) {
    mean += e.y / n;
    mean_v += e.se * e.se / n;
  }
  double spread = 0.0;
  for (const auto& e : estimates) spread += (e.y - mean) * (e.y - mean);
  if (spread == 0.0) return 0.0;
  const double upper = 100.0 * (spread / (n - 1.0) + mean_v) + 1.0;

  auto f = [&](double t) { return -reml_loglik(estimates, t); };
  constexpr double kGold = 0.3819660112501051;
  constexpr double kTol = 1e-8;
  double a = 0.0, b = upper;
  double x = a + kGold * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const double m = 0.5 * (a + b);
    const double tol1 = 1e-10 * std::abs(x) + 0.25 * kTol;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (m - x >= 0.0) ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= m) ? a - x : b - x;
      d = kGold * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d >= 0.0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      (u >= x ? a : b) = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  if (iter == max_iter) throw NumericalError("REML did not converge", x);
  // The maximum may sit on the boundary.
  if (f(0.0) <= fx) return 0.0;
  // Likelihood values are flat to rounding near the optimum; polish on the
  // score instead, by bisection inside a bracket around the Brent iterate.
  const double h = 1e-5 * (1.0 + x);
  double lo = std::max(0.0, x - h), hi = x + h;
  double s_lo = reml_score(estimates, lo), s_hi = reml_score(estimates, hi);
  if (s_lo > 0.0 && s_hi < 0.0) {
    for (int i = 0; i < 200 && hi - lo > 1e-14 * (1.0 + x); ++i) {
      const double mid = 0.5 * (lo + hi);
      (reml_score(estimates, mid) > 0.0 ? lo : hi) = mid;
    }
    x = 0.5 * (lo + hi);
  }
  return x;
}

inline PooledResult pool(std::span<const EffectEstimate> estimates, PoolingMethod method) {
  switch (method) {
    case PoolingMethod::FixedIV: return fixed_effect_iv(estimates);
    case PoolingMethod::RandomDL:
      return random_effects(estimates, heterogeneity(estimates).tau2, PoolingMethod::RandomDL);
    case PoolingMethod::RandomREML:
      return random_effects(estimates, estimates.size() < 2 ? 0.0 : reml_tau2(estimates),
                            PoolingMethod::RandomREML);
    case PoolingMethod::FixedMH:
      throw ValidationError("Mantel-Haenszel pooling needs raw 2x2 tables");
  }
  return {};
}

enum class MHScale { OR, RR, RD };

struct MHResult {
  PooledResult pooled;
  std::vector<Exclusion> exclusions;
};

// Mantel-Haenszel fixed-effect pooling on uncorrected tables. Ratio results
// are reported on the log scale. Variances: Robins-Breslow-Greenland (OR),
// Greenland-Robins (RR, RD).
inline MHResult mantel_haenszel(std::span<const DichotomousCounts> tables, MHScale scale,
                                std::span<const std::string> labels = {}) {
  if (tables.empty()) throw ValidationError("Mantel-Haenszel pooling needs at least one table");
  MHResult out;
  std::vector<effectsize::Table> used;
  std::vector<double> weights;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& t = tables[i];
    const bool ratio = scale != MHScale::RD;
    const std::string label = i < labels.size() ? labels[i] : "study " + std::to_string(i + 1);
    if (ratio && effectsize::double_zero(t)) {
      out.exclusions.push_back({label, "no events in either group"});
      continue;
    }
    if (scale == MHScale::OR && effectsize::double_total(t)) {
      out.exclusions.push_back({label, "all participants had events in both groups"});
      continue;
    }
    used.push_back(effectsize::make_table(t));
  }
  if (used.empty()) throw ValidationError("no estimable tables for Mantel-Haenszel pooling");

  double y = 0.0, var = 0.0;
  switch (scale) {
    case MHScale::OR: {
      double sr = 0, ss = 0, spr = 0, sps_qr = 0, sqs = 0;
      for (const auto& t : used) {
        const double n = t.n1() + t.n2();
        const double p = (t.a + t.d) / n, q = (t.b + t.c) / n;
        const double r = t.a * t.d / n, s = t.b * t.c / n;
        sr += r;
        ss += s;
        spr += p * r;
        sps_qr += p * s + q * r;
        sqs += q * s;
        weights.push_back(s);
      }
      if (sr == 0.0 || ss == 0.0)
        throw ValidationError("Mantel-Haenszel odds ratio is 0 or infinite for these tables");
      y = std::log(sr / ss);
      var = spr / (2 * sr * sr) + sps_qr / (2 * sr * ss) + sqs / (2 * ss * ss);
      break;
    }
    case MHScale::RR: {
      double sr = 0, ss = 0, sv = 0;
      for (const auto& t : used) {
        const double n1 = t.n1(), n2 = t.n2(), n = n1 + n2;
        sr += t.a * n2 / n;
        ss += t.c * n1 / n;
        sv += (n1 * n2 * (t.a + t.c) - t.a * t.c * n) / (n * n);
        weights.push_back(t.c * n1 / n);
      }
      if (sr == 0.0 || ss == 0.0)
        throw ValidationError("Mantel-Haenszel risk ratio is 0 or infinite for these tables");
      y = std::log(sr / ss);
      var = sv / (sr * ss);
      break;
    }
    case MHScale::RD: {
      double sw = 0, swd = 0, sv = 0;
      for (const auto& t : used) {
        const double n1 = t.n1(), n2 = t.n2(), n = n1 + n2;
        const double w = n1 * n2 / n;
        sw += w;
        swd += w * (t.a / n1 - t.c / n2);
        sv += (t.a * t.b * n2 * n2 * n2 + t.c * t.d * n1 * n1 * n1) / (n1 * n2 * n * n);
        weights.push_back(w);
      }
      y = swd / sw;
      var = sv / (sw * sw);
      break;
    }
  }
  if (!(var > 0.0) || !std::isfinite(var))
    throw ValidationError("Mantel-Haenszel variance is not positive for these tables");
  if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0) weights.assign(used.size(), 1.0);
  out.pooled = classical_detail::finish(PoolingMethod::FixedMH, y, std::sqrt(var), weights, 0.0);
  return out;
}

inline MHScale mh_scale_for(EffectScale scale) {
  switch (scale) {
    case EffectScale::LogOddsRatio: return MHScale::OR;
    case EffectScale::LogRiskRatio: return MHScale::RR;
    case EffectScale::RiskDifference: return MHScale::RD;
    default:
      throw ValidationError("Mantel-Haenszel pooling supports logor, logrr and rd scales");
  }
}

// Weighted regression of y on se (weights 1/se^2), i.e. OLS of y/se on 1/se;
// the intercept measures funnel asymmetry.
inline EggerResult egger_test(std::span<const EffectEstimate> estimates) {
  const auto k = estimates.size();
  if (k < 3) throw ValidationError("Egger's test needs at least three studies");
  double sx = 0, sz = 0, sxx = 0, sxz = 0;
  for (const auto& e : estimates) {
    const double x = 1.0 / e.se, z = e.y / e.se;
    sx += x;
    sz += z;
    sxx += x * x;
    sxz += x * z;
  }
  const double n = static_cast<double>(k);
  const double mx = sx / n, mz = sz / n;
  const double sxx_c = sxx - n * mx * mx;
  if (!(sxx_c > 0.0)) throw ValidationError("Egger's test needs studies with differing precision");
  const double slope = (sxz - n * mx * mz) / sxx_c;
  const double intercept = mz - slope * mx;
  double rss = 0.0;
  for (const auto& e : estimates) {
    const double r = e.y / e.se - intercept - slope / e.se;
    rss += r * r;
  }
  EggerResult out;
  out.df = static_cast<int>(k) - 2;
  const double sigma2 = rss / out.df;
  out.intercept = intercept;
  out.se_intercept = std::sqrt(sigma2 * (1.0 / n + mx * mx / sxx_c));
  out.t = out.se_intercept > 0.0 ? intercept / out.se_intercept
                                 : (intercept == 0.0 ? 0.0 : std::copysign(INFINITY, intercept));
  out.p = out.se_intercept > 0.0 || intercept != 0.0 ? stats::two_sided_t_p(out.t, out.df) : 1.0;
  return out;
}

inline TransformedResult transform(const PooledResult& result, EffectScale scale) {
  if (!is_log_scale(scale)) return {result.y, result.ci_low, result.ci_high, false};
  return {std::exp(result.y), std::exp(result.ci_low), std::exp(result.ci_high), true};
}

}  // namespace trialsynth

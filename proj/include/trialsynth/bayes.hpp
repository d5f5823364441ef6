#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "trialsynth/effectsize.hpp"
#include "trialsynth/error.hpp"
#include "trialsynth/priors.hpp"
#include "trialsynth/quadrature.hpp"
#include "trialsynth/stats.hpp"

namespace trialsynth {

// The four-model ensemble. Null models fix mu = 0; fixed models fix tau = 0.
enum class BayesModel { FixedNull = 0, FixedAlt = 1, RandomNull = 2, RandomAlt = 3 };

inline constexpr std::array<BayesModel, 4> kAllModels = {
    BayesModel::FixedNull, BayesModel::FixedAlt, BayesModel::RandomNull, BayesModel::RandomAlt};

inline std::string_view model_name(BayesModel m) {
  switch (m) {
    case BayesModel::FixedNull: return "fixed_null";
    case BayesModel::FixedAlt: return "fixed_alt";
    case BayesModel::RandomNull: return "random_null";
    case BayesModel::RandomAlt: return "random_alt";
  }
  return "";
}

enum class Parameter { Mu, Tau };

// Which posterior a density refers to. AveragedAlt mixes the fixed and random
// alternatives for mu, and the two random models for tau.
enum class DensityModel { FixedAlt, RandomAlt, RandomNull, AveragedAlt };

inline std::string_view density_model_name(DensityModel m) {
  switch (m) {
    case DensityModel::FixedAlt: return "fixed_alt";
    case DensityModel::RandomAlt: return "random_alt";
    case DensityModel::RandomNull: return "random_null";
    case DensityModel::AveragedAlt: return "averaged_alt";
  }
  return "";
}

struct PosteriorSummary {
  double mean = 0.0;
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct TransformedSummary {
  double mean = 0.0;         // E[exp(x)] under the posterior
  double exp_of_mean = 0.0;  // exp(E[x])
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct PosteriorDensity {
  Parameter parameter = Parameter::Mu;
  DensityModel model = DensityModel::AveragedAlt;
  std::vector<double> grid;
  std::vector<double> density;
  PosteriorSummary summary;
};

struct ModelMarginals {
  std::array<double, 4> log_marginal{};
  std::array<double, 4> prior_probs{0.25, 0.25, 0.25, 0.25};

  double log_m(BayesModel m) const { return log_marginal[static_cast<int>(m)]; }
};

struct BMAResult {
  ModelMarginals marginals;
  double log_bf10_fixed = 0.0;
  double log_bf10_random = 0.0;
  double log_bf_rf = 0.0;
  double log_bf_inclusion = 0.0;
  double bf10_fixed = 1.0;
  double bf10_random = 1.0;
  double bf_rf = 1.0;  // random-alt over fixed-alt
  double bf_inclusion = 1.0;  // effect presence over absence
  std::array<double, 4> posterior_probs{};
  // Posterior weight of fixed_alt among the two alternative models.
  double fixed_weight = 0.5;
  PosteriorDensity mu_fixed;
  PosteriorDensity mu_random;
  PosteriorDensity mu_averaged;
  PosteriorDensity tau_random;
  PosteriorDensity tau_random_null;
  PosteriorDensity tau_averaged;
};

struct BayesOptions {
  int grid_points = 512;
  double target_rel_error_1d = 1e-6;
  double target_rel_error_2d = 1e-5;
};

// Trapezoid rule on an arbitrary increasing grid.
inline double trapezoid(std::span<const double> x, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

// Value where the trapezoid CDF of a normalized density reaches p.
inline double grid_quantile(std::span<const double> x, std::span<const double> f, double p) {
  double cum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double h = x[i] - x[i - 1];
    const double piece = 0.5 * h * (f[i] + f[i - 1]);
    if (cum + piece >= p && piece > 0.0) {
      // CDF is quadratic within the segment for a linear density.
      const double target = p - cum;
      const double f0 = f[i - 1];
      const double slope = (f[i] - f[i - 1]) / h;
      const double root = f0 + std::sqrt(std::max(0.0, f0 * f0 + 2.0 * slope * target));
      const double t = root > 0.0 ? 2.0 * target / root : 0.0;
      return x[i - 1] + std::clamp(t, 0.0, h);
    }
    cum += piece;
  }
  return x.back();
}

inline PosteriorSummary summarize(std::span<const double> x, std::span<const double> f) {
  PosteriorSummary s;
  std::vector<double> xf(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xf[i] = x[i] * f[i];
  s.mean = trapezoid(x, xf);
  s.median = grid_quantile(x, f, 0.5);
  s.ci_low = grid_quantile(x, f, 0.025);
  s.ci_high = grid_quantile(x, f, 0.975);
  return s;
}

// Exponentiates median and interval; the mean is E[exp(x)] by grid integration.
inline TransformedSummary transform_posterior(const PosteriorDensity& d) {
  TransformedSummary t;
  std::vector<double> ef(d.grid.size());
  for (std::size_t i = 0; i < d.grid.size(); ++i) ef[i] = std::exp(d.grid[i]) * d.density[i];
  t.mean = trapezoid(d.grid, ef);
  t.exp_of_mean = std::exp(d.summary.mean);
  t.median = std::exp(d.summary.median);
  t.ci_low = std::exp(d.summary.ci_low);
  t.ci_high = std::exp(d.summary.ci_high);
  return t;
}

// Summary of mu when averaging over all four models: a point mass at 0 with
// the posterior probability of the null models plus the averaged alternative.
inline PosteriorSummary summarize_with_null_mass(const PosteriorDensity& alt, double null_prob) {
  PosteriorSummary s;
  const double alt_prob = 1.0 - null_prob;
  s.mean = alt_prob * alt.summary.mean;
  std::vector<double> f(alt.density.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = alt_prob * alt.density[i];
  auto q = [&](double p) {
    // Continuous mass below zero, then the jump at zero.
    std::vector<double> below_x, below_f;
    double mass_below = 0.0;
    for (std::size_t i = 1; i < alt.grid.size(); ++i) {
      const double a = alt.grid[i - 1], b = alt.grid[i];
      if (b <= 0.0) {
        mass_below += 0.5 * (b - a) * (f[i] + f[i - 1]);
      } else if (a < 0.0) {
        const double fz = f[i - 1] + (f[i] - f[i - 1]) * (-a) / (b - a);
        mass_below += 0.5 * (-a) * (f[i - 1] + fz);
      }
    }
    if (p <= mass_below) return grid_quantile(alt.grid, f, p);
    if (p <= mass_below + null_prob) return 0.0;
    return grid_quantile(alt.grid, f, p - null_prob);
  };
  s.median = q(0.5);
  s.ci_low = q(0.025);
  s.ci_high = q(0.975);
  return s;
}

// Bayesian fixed/random-effects meta-analysis with marginal likelihoods by
// deterministic adaptive quadrature. Likelihood: y_i ~ N(mu, se_i^2 + tau^2).
class BayesianMetaAnalysis {
 public:
  BayesianMetaAnalysis(std::vector<EffectEstimate> estimates, PriorSpec priors,
                       BayesOptions options = {})
      : priors_(priors), options_(options) {
    if (estimates.empty()) throw ValidationError("Bayesian meta-analysis needs at least one estimate");
    for (const auto& e : estimates)
      if (!std::isfinite(e.y) || !(e.se > 0.0) || !std::isfinite(e.se))
        throw ValidationError("estimate '" + e.label + "' is not finite");
    // Canonical order makes every result exactly invariant to study order.
    std::sort(estimates.begin(), estimates.end(), [](const auto& a, const auto& b) {
      return a.y != b.y ? a.y < b.y : a.se < b.se;
    });
    y_.reserve(estimates.size());
    v_.reserve(estimates.size());
    for (const auto& e : estimates) {
      y_.push_back(e.y);
      v_.push_back(e.se * e.se);
    }
    const double tq = 1e-6;
    tau_lo_ = priors_.heterogeneity.quantile(tq);
    tau_hi_ = priors_.heterogeneity.quantile(1.0 - tq);
    tau_lo_mass_ = priors_.heterogeneity.cdf(tau_lo_);
    for (auto m : kAllModels) log_m_[static_cast<int>(m)] = compute_log_marginal(m);
  }

  const PriorSpec& priors() const { return priors_; }
  std::size_t size() const { return y_.size(); }

  double log_marginal(BayesModel m) const { return log_m_[static_cast<int>(m)]; }

  ModelMarginals marginals(std::array<double, 4> prior_probs = {0.25, 0.25, 0.25, 0.25}) const {
    ModelMarginals out;
    out.prior_probs = prior_probs;
    out.log_marginal = log_m_;
    return out;
  }

  // Log-likelihood with mu and tau fixed.
  double log_likelihood(double mu, double tau) const {
    const double t2 = tau * tau;
    double s = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) s += stats::log_normal_pdf(y_[i], mu, v_[i] + t2);
    return s;
  }

  // Unnormalized log posterior density of a parameter under a model, divided
  // by the model's marginal likelihood (so it integrates to one analytically).
  double log_posterior(Parameter p, DensityModel m, double x) const {
    const auto& mu_prior = priors_.effect;
    const auto& tau_prior = priors_.heterogeneity;
    if (p == Parameter::Mu) {
      switch (m) {
        case DensityModel::FixedAlt: {
          const auto g = profile(0.0);
          return g.c - 0.5 * g.w * (x - g.mean) * (x - g.mean) + mu_prior.log_density(x) -
                 log_marginal(BayesModel::FixedAlt);
        }
        case DensityModel::RandomAlt:
          return mu_prior.log_density(x) + log_tau_integral([&](double tau) {
                   return log_likelihood(x, tau);
                 }).log_value -
                 log_marginal(BayesModel::RandomAlt);
        default: throw ValidationError("mu posterior needs fixed_alt, random_alt or averaged_alt");
      }
    }
    switch (m) {
      case DensityModel::RandomAlt:
        return tau_prior.log_density(x) + log_mu_integral(x).log_value -
               log_marginal(BayesModel::RandomAlt);
      case DensityModel::RandomNull:
        return tau_prior.log_density(x) + log_likelihood(0.0, x) -
               log_marginal(BayesModel::RandomNull);
      default: throw ValidationError("tau posterior needs random_alt, random_null or averaged_alt");
    }
  }

  // Posterior density on a 512-point grid over the central 0.9999 prior mass
  // (log-spaced for tau), or around the data when the posterior falls outside
  // it. The grid is narrowed while fewer than 128 points carry non-negligible
  // density, so sharp posteriors stay resolved.
  PosteriorDensity posterior_density(Parameter p, DensityModel m, double fixed_weight = 0.5) const {
    const Prior& prior = p == Parameter::Mu ? priors_.effect : priors_.heterogeneity;
    const bool log_grid = p == Parameter::Tau;
    double lo = prior.quantile(5e-5), hi = prior.quantile(1.0 - 5e-5);
    const int n = options_.grid_points;
    std::vector<double> grid;
    std::vector<double> dens;
    for (int round = 0; round < 8; ++round) {
      grid = make_grid(lo, hi, n, log_grid);
      dens = raw_density(p, m, grid, fixed_weight);
      const double peak = *std::max_element(dens.begin(), dens.end());
      if (!(peak > 0.0) || !std::isfinite(peak)) {
        if (p == Parameter::Tau || round > 0)
          throw NumericalError("posterior density vanished on the evaluation grid");
        // Prior-data conflict: recentre on the normal approximation used for
        // the marginal breakpoints.
        const auto g = profile(0.0);
        const double sd = 1.0 / std::sqrt(g.w);
        const double wp = 1.0 / (prior.scale * prior.scale);
        const double centre = (g.w * g.mean + wp * prior.location) / (g.w + wp);
        lo = centre - std::abs(g.mean - centre) - 12.0 * sd;
        hi = centre + std::abs(g.mean - centre) + 12.0 * sd;
        if (!(hi > lo)) throw NumericalError("posterior lies outside the representable range");
        continue;
      }
      int first = 0, last = n - 1;
      while (first < n && dens[first] <= 1e-12 * peak) ++first;
      while (last > 0 && dens[last] <= 1e-12 * peak) --last;
      if (last - first >= 128) break;
      const double nlo = grid[std::max(first - 1, 0)];
      const double nhi = grid[std::min(last + 1, n - 1)];
      if (nlo == lo && nhi == hi) break;
      lo = nlo;
      hi = nhi;
    }
    return finish_density(p, m, std::move(grid), std::move(dens));
  }

  // Density evaluated on a caller-supplied grid, trapezoid-normalized.
  PosteriorDensity posterior_density_on(Parameter p, DensityModel m, std::vector<double> grid,
                                        double fixed_weight = 0.5) const {
    auto dens = raw_density(p, m, grid, fixed_weight);
    return finish_density(p, m, std::move(grid), std::move(dens));
  }

  BMAResult bma(std::array<double, 4> prior_probs = {0.25, 0.25, 0.25, 0.25}) const {
    double total = 0.0;
    for (double q : prior_probs) {
      if (!(q >= 0.0) || !std::isfinite(q))
        throw ValidationError("prior model probabilities must be non-negative", "prior_model_probs");
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("prior model probabilities must sum to 1", "prior_model_probs");
    const auto idx = [](BayesModel m) { return static_cast<int>(m); };
    const double prior_alt = prior_probs[idx(BayesModel::FixedAlt)] + prior_probs[idx(BayesModel::RandomAlt)];
    const double prior_null = prior_probs[idx(BayesModel::FixedNull)] + prior_probs[idx(BayesModel::RandomNull)];
    if (prior_alt <= 0.0 || prior_null <= 0.0)
      throw ValidationError(
          "inclusion Bayes factor needs nonzero prior mass on both null and alternative models",
          "prior_model_probs");

    BMAResult r;
    r.marginals = marginals(prior_probs);
    const auto lm = [&](BayesModel m) { return log_marginal(m); };
    r.log_bf10_fixed = lm(BayesModel::FixedAlt) - lm(BayesModel::FixedNull);
    r.log_bf10_random = lm(BayesModel::RandomAlt) - lm(BayesModel::RandomNull);
    r.log_bf_rf = lm(BayesModel::RandomAlt) - lm(BayesModel::FixedAlt);
    r.bf10_fixed = std::exp(r.log_bf10_fixed);
    r.bf10_random = std::exp(r.log_bf10_random);
    r.bf_rf = std::exp(r.log_bf_rf);

    std::array<double, 4> log_post{};
    for (auto m : kAllModels) {
      const double q = prior_probs[idx(m)];
      log_post[idx(m)] = q > 0.0 ? std::log(q) + lm(m) : -std::numeric_limits<double>::infinity();
    }
    const double norm = stats::log_sum_exp(log_post);
    for (auto m : kAllModels) r.posterior_probs[idx(m)] = std::exp(log_post[idx(m)] - norm);

    const std::array<double, 2> alt{log_post[idx(BayesModel::FixedAlt)], log_post[idx(BayesModel::RandomAlt)]};
    const std::array<double, 2> nul{log_post[idx(BayesModel::FixedNull)], log_post[idx(BayesModel::RandomNull)]};
    const double log_post_odds = stats::log_sum_exp(alt) - stats::log_sum_exp(nul);
    r.log_bf_inclusion = log_post_odds - (std::log(prior_alt) - std::log(prior_null));
    r.bf_inclusion = std::exp(r.log_bf_inclusion);

    r.fixed_weight = std::exp(alt[0] - stats::log_sum_exp(alt));
    r.mu_fixed = posterior_density(Parameter::Mu, DensityModel::FixedAlt);
    r.mu_random = posterior_density(Parameter::Mu, DensityModel::RandomAlt);
    r.mu_averaged = posterior_density(Parameter::Mu, DensityModel::AveragedAlt, r.fixed_weight);
    r.tau_random = posterior_density(Parameter::Tau, DensityModel::RandomAlt);
    r.tau_random_null = posterior_density(Parameter::Tau, DensityModel::RandomNull);
    const std::array<double, 2> rnd{log_post[idx(BayesModel::RandomNull)], log_post[idx(BayesModel::RandomAlt)]};
    const double lr = stats::log_sum_exp(rnd);
    // For tau the mixture weight goes to random_null (the slot used by fixed_alt for mu).
    const double null_weight = std::isfinite(lr) ? std::exp(rnd[0] - lr) : 0.5;
    r.tau_averaged = posterior_density(Parameter::Tau, DensityModel::AveragedAlt, null_weight);
    return r;
  }

 private:
  struct Profile {
    double c;     // log-likelihood at the weighted mean
    double w;     // total precision
    double mean;  // precision-weighted mean
  };

  // For fixed tau the likelihood in mu is Gaussian: c - w (mu - mean)^2 / 2.
  Profile profile(double tau) const {
    const double t2 = tau * tau;
    double w = 0.0, wy = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double wi = 1.0 / (v_[i] + t2);
      w += wi;
      wy += wi * y_[i];
    }
    const double mean = wy / w;
    double c = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) c += stats::log_normal_pdf(y_[i], mean, v_[i] + t2);
    return {c, w, mean};
  }

  std::vector<double> mu_breakpoints(double center, double sd) const {
    const auto [plo, phi] = priors_.effect.effect_domain();
    const double lo = std::min(plo, center - 12.0 * sd);
    const double hi = std::max(phi, center + 12.0 * sd);
    std::vector<double> pts{lo, hi};
    for (double k : {0.0, -1.5, 1.5, -4.0, 4.0}) pts.push_back(center + k * sd);
    const double loc = priors_.effect.location, sc = priors_.effect.scale;
    for (double k : {0.0, -1.0, 1.0, -4.0, 4.0}) pts.push_back(loc + k * sc);
    // Normal approximation to the posterior, treating the prior scale as an sd.
    const double wl = 1.0 / (sd * sd), wp = 1.0 / (sc * sc);
    const double post_mean = (wl * center + wp * loc) / (wl + wp), post_sd = 1.0 / std::sqrt(wl + wp);
    for (double k : {0.0, -1.5, 1.5, -4.0, 4.0}) pts.push_back(post_mean + k * post_sd);
    std::erase_if(pts, [&](double x) { return x < lo || x > hi; });
    return pts;
  }

  // log of integral over mu of L(mu, tau) p(mu).
  quadrature::LogResult log_mu_integral(double tau, double rel_tol = 1e-11) const {
    const auto g = profile(tau);
    const double sd = 1.0 / std::sqrt(g.w);
    auto f = [&](double mu) {
      return -0.5 * g.w * (mu - g.mean) * (mu - g.mean) + priors_.effect.log_density(mu);
    };
    auto r = quadrature::integrate_log(f, mu_breakpoints(g.mean, sd), {rel_tol, 0.0, 4000});
    r.log_value += g.c;
    return r;
  }

  // log of integral over tau of exp(log_g(tau)) p(tau), integrated in log(tau)
  // over the prior's central 1 - 2e-6 region. The mass below the lower bound is
  // added assuming g is flat there (it is even in tau).
  template <class LogG>
  quadrature::LogResult log_tau_integral(LogG&& log_g, double rel_tol = 1e-10) const {
    const auto& prior = priors_.heterogeneity;
    const double ulo = std::log(tau_lo_), uhi = std::log(tau_hi_);
    std::vector<double> pts;
    constexpr int kSegments = 16;
    for (int i = 0; i <= kSegments; ++i) pts.push_back(ulo + (uhi - ulo) * i / kSegments);
    auto f = [&](double u) {
      const double tau = std::exp(u);
      return log_g(tau) + prior.log_density(tau) + u;
    };
    auto r = quadrature::integrate_log(f, pts, {rel_tol, 0.0, 4000}, 8);
    if (tau_lo_mass_ > 0.0)
      r.log_value = stats::log_add_exp(r.log_value, std::log(tau_lo_mass_) + log_g(tau_lo_));
    return r;
  }

  double compute_log_marginal(BayesModel m) const {
    switch (m) {
      case BayesModel::FixedNull: return log_likelihood(0.0, 0.0);
      case BayesModel::FixedAlt: {
        const auto r = log_mu_integral(0.0);
        check(r.rel_error, options_.target_rel_error_1d, m);
        return r.log_value;
      }
      case BayesModel::RandomNull: {
        const auto r = log_tau_integral([&](double tau) { return log_likelihood(0.0, tau); });
        check(r.rel_error, options_.target_rel_error_1d, m);
        return r.log_value;
      }
      case BayesModel::RandomAlt: {
        double worst_inner = 0.0;
        const auto r = log_tau_integral(
            [&](double tau) {
              const auto inner = log_mu_integral(tau);
              worst_inner = std::max(worst_inner, inner.rel_error);
              return inner.log_value;
            },
            1e-9);
        check(r.rel_error + worst_inner, options_.target_rel_error_2d, m);
        return r.log_value;
      }
    }
    return 0.0;
  }

  static void check(double achieved, double target, BayesModel m) {
    if (!(achieved <= target))
      throw NumericalError("quadrature for " + std::string(model_name(m)) +
                               " missed its error target; achieved relative error " +
                               quadrature::sci(achieved),
                           achieved);
  }

  static std::vector<double> make_grid(double lo, double hi, int n, bool log_spaced) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / (n - 1);
      g[i] = log_spaced ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                        : lo + t * (hi - lo);
    }
    return g;
  }

  std::vector<double> normalized(Parameter p, DensityModel m, const std::vector<double>& grid) const {
    std::vector<double> d(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) d[i] = std::exp(log_posterior(p, m, grid[i]));
    const double z = trapezoid(grid, d);
    if (z > 0.0)
      for (double& v : d) v /= z;
    return d;
  }

  // Component densities are trapezoid-normalized on the grid before mixing.
  std::vector<double> raw_density(Parameter p, DensityModel m, const std::vector<double>& grid,
                                  double first_weight) const {
    if (m != DensityModel::AveragedAlt) return normalized(p, m, grid);
    const auto a = normalized(p, p == Parameter::Mu ? DensityModel::FixedAlt : DensityModel::RandomNull, grid);
    const auto b = normalized(p, DensityModel::RandomAlt, grid);
    std::vector<double> d(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) d[i] = first_weight * a[i] + (1.0 - first_weight) * b[i];
    return d;
  }

  static PosteriorDensity finish_density(Parameter p, DensityModel m, std::vector<double> grid,
                                         std::vector<double> dens) {
    PosteriorDensity out;
    out.parameter = p;
    out.model = m;
    const double z = trapezoid(grid, dens);
    if (!(z > 0.0)) throw NumericalError("posterior density has no mass on its grid");
    for (double& v : dens) v /= z;
    out.summary = summarize(grid, dens);
    out.grid = std::move(grid);
    out.density = std::move(dens);
    return out;
  }

  PriorSpec priors_;
  BayesOptions options_;
  std::vector<double> y_;
  std::vector<double> v_;
  double tau_lo_ = 0.0;
  double tau_hi_ = 0.0;
  double tau_lo_mass_ = 0.0;
  std::array<double, 4> log_m_{};
};

inline double log_marginal(BayesModel model, std::span<const EffectEstimate> estimates,
                           const PriorSpec& priors) {
  return BayesianMetaAnalysis({estimates.begin(), estimates.end()}, priors).log_marginal(model);
}

inline BMAResult bma(std::span<const EffectEstimate> estimates, const PriorSpec& priors,
                     std::array<double, 4> prior_model_probs = {0.25, 0.25, 0.25, 0.25}) {
  return BayesianMetaAnalysis({estimates.begin(), estimates.end()}, priors).bma(prior_model_probs);
}

inline PosteriorDensity posterior_density(Parameter parameter, DensityModel model,
                                          std::span<const EffectEstimate> estimates,
                                          const PriorSpec& priors) {
  BayesianMetaAnalysis engine({estimates.begin(), estimates.end()}, priors);
  double w = 0.5;
  if (model == DensityModel::AveragedAlt) {
    const auto lf = engine.log_marginal(parameter == Parameter::Mu ? BayesModel::FixedAlt
                                                                   : BayesModel::RandomNull);
    const auto lr = engine.log_marginal(BayesModel::RandomAlt);
    w = 1.0 / (1.0 + std::exp(lr - lf));
  }
  return engine.posterior_density(parameter, model, w);
}

}  // namespace trialsynth

#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "trialsynth/error.hpp"

namespace trialsynth {

enum class PriorFamily { Normal, StudentT, Cauchy, InvGamma, HalfNormal, HalfCauchy };

// A univariate prior. Effect priors (Normal, StudentT, Cauchy) live on the real
// line; heterogeneity priors (InvGamma, HalfNormal, HalfCauchy) on (0, inf).
//
//   Normal(location = mean, scale = sd)
//   StudentT(location, scale, df)        location-scale t
//   Cauchy(location, scale)
//   InvGamma(shape, scale)               scale^shape / Gamma(shape) x^(-shape-1) exp(-scale/x)
//   HalfNormal(scale = sd)
//   HalfCauchy(scale)
struct Prior {
  PriorFamily family = PriorFamily::Normal;
  double location = 0.0;
  double scale = 1.0;
  double shape = 1.0;  // df for StudentT, shape for InvGamma

  static Prior normal(double mean, double sd) { return checked({PriorFamily::Normal, mean, sd, 1.0}); }
  static Prior student_t(double loc, double scale, double df) {
    return checked({PriorFamily::StudentT, loc, scale, df});
  }
  static Prior cauchy(double loc, double scale) { return checked({PriorFamily::Cauchy, loc, scale, 1.0}); }
  static Prior inv_gamma(double shape, double scale) {
    return checked({PriorFamily::InvGamma, 0.0, scale, shape});
  }
  static Prior half_normal(double sd) { return checked({PriorFamily::HalfNormal, 0.0, sd, 1.0}); }
  static Prior half_cauchy(double scale) { return checked({PriorFamily::HalfCauchy, 0.0, scale, 1.0}); }

  bool positive_support() const {
    return family == PriorFamily::InvGamma || family == PriorFamily::HalfNormal ||
           family == PriorFamily::HalfCauchy;
  }

  double log_density(double x) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (positive_support() && !(x > 0.0)) return kNegInf;
    switch (family) {
      case PriorFamily::Normal: {
        const double z = (x - location) / scale;
        return -0.5 * z * z - std::log(scale) - 0.5 * std::log(2.0 * std::numbers::pi);
      }
      case PriorFamily::StudentT: {
        const double z = (x - location) / scale;
        const double nu = shape;
        return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
               0.5 * std::log(nu * std::numbers::pi) - std::log(scale) -
               0.5 * (nu + 1.0) * std::log1p(z * z / nu);
      }
      case PriorFamily::Cauchy: {
        const double z = (x - location) / scale;
        return -std::log(std::numbers::pi * scale) - std::log1p(z * z);
      }
      case PriorFamily::InvGamma:
        return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) -
               scale / x;
      case PriorFamily::HalfNormal: {
        const double z = x / scale;
        return std::log(2.0) - 0.5 * z * z - std::log(scale) -
               0.5 * std::log(2.0 * std::numbers::pi);
      }
      case PriorFamily::HalfCauchy: {
        const double z = x / scale;
        return std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(z * z);
      }
    }
    return kNegInf;
  }

  double density(double x) const { return std::exp(log_density(x)); }

  double cdf(double x) const {
    namespace bm = boost::math;
    if (positive_support() && !(x > 0.0)) return 0.0;
    switch (family) {
      case PriorFamily::Normal: return bm::cdf(bm::normal(location, scale), x);
      case PriorFamily::StudentT: return bm::cdf(bm::students_t(shape), (x - location) / scale);
      case PriorFamily::Cauchy: return 0.5 + std::atan((x - location) / scale) / std::numbers::pi;
      case PriorFamily::InvGamma: return bm::gamma_q(shape, scale / x);
      case PriorFamily::HalfNormal: return std::erf(x / (scale * std::numbers::sqrt2));
      case PriorFamily::HalfCauchy: return 2.0 * std::atan(x / scale) / std::numbers::pi;
    }
    return 0.0;
  }

  double quantile(double p) const {
    namespace bm = boost::math;
    switch (family) {
      case PriorFamily::Normal: return bm::quantile(bm::normal(location, scale), p);
      case PriorFamily::StudentT:
        return location + scale * bm::quantile(bm::students_t(shape), p);
      case PriorFamily::Cauchy: return location + scale * std::tan(std::numbers::pi * (p - 0.5));
      case PriorFamily::InvGamma: return bm::quantile(bm::inverse_gamma_distribution(shape, scale), p);
      case PriorFamily::HalfNormal:
        return scale * bm::quantile(bm::normal(0.0, 1.0), 0.5 * (1.0 + p));
      case PriorFamily::HalfCauchy: return scale * std::tan(0.5 * std::numbers::pi * p);
    }
    return 0.0;
  }

  // NaN where the mean does not exist.
  double mean() const {
    constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
    switch (family) {
      case PriorFamily::Normal: return location;
      case PriorFamily::StudentT: return shape > 1.0 ? location : kNaN;
      case PriorFamily::Cauchy: return kNaN;
      case PriorFamily::InvGamma: return shape > 1.0 ? scale / (shape - 1.0) : kNaN;
      case PriorFamily::HalfNormal: return scale * std::sqrt(2.0 / std::numbers::pi);
      case PriorFamily::HalfCauchy: return kNaN;
    }
    return kNaN;
  }

  // Integration range for effect priors: location +- 10 sd (normal) or
  // +- 12 scales (t, Cauchy).
  std::pair<double, double> effect_domain() const {
    const double width = (family == PriorFamily::Normal ? 10.0 : 12.0) * scale;
    return {location - width, location + width};
  }

  std::string to_string() const;

  bool operator==(const Prior&) const = default;

 private:
  static Prior checked(Prior p) {
    if (!(p.scale > 0.0) || !std::isfinite(p.scale))
      throw ValidationError("prior scale must be positive");
    if (!(p.shape > 0.0) || !std::isfinite(p.shape))
      throw ValidationError("prior shape/df must be positive");
    if (!std::isfinite(p.location)) throw ValidationError("prior location must be finite");
    return p;
  }
};

namespace prior_detail {

inline std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace prior_detail

inline std::string Prior::to_string() const {
  using prior_detail::fmt;
  switch (family) {
    case PriorFamily::Normal: return "normal(" + fmt(location) + "," + fmt(scale) + ")";
    case PriorFamily::StudentT:
      return "t(" + fmt(location) + "," + fmt(scale) + "," + fmt(shape) + ")";
    case PriorFamily::Cauchy: return "cauchy(" + fmt(location) + "," + fmt(scale) + ")";
    case PriorFamily::InvGamma: return "invgamma(" + fmt(shape) + "," + fmt(scale) + ")";
    case PriorFamily::HalfNormal: return "halfnormal(" + fmt(scale) + ")";
    case PriorFamily::HalfCauchy: return "halfcauchy(" + fmt(scale) + ")";
  }
  return {};
}

// Parses `t(loc,scale,df)`, `normal(m,sd)`, `cauchy(loc,scale)`,
// `invgamma(shape,scale)`, `halfnormal(sd)` or `halfcauchy(scale)`.
inline Prior parse_prior(std::string_view text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch)))
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')')
    throw ValidationError("malformed prior '" + std::string(text) + "'");
  const std::string name = s.substr(0, open);
  std::vector<double> args;
  std::string_view body(s.data() + open + 1, s.size() - open - 2);
  while (!body.empty()) {
    const auto comma = body.find(',');
    const auto tok = body.substr(0, comma);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw ValidationError("malformed number '" + std::string(tok) + "' in prior '" +
                            std::string(text) + "'");
    args.push_back(v);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n)
      throw ValidationError("prior '" + name + "' takes " + std::to_string(n) + " argument(s)");
  };
  if (name == "t" || name == "student_t" || name == "studentt") {
    need(3);
    return Prior::student_t(args[0], args[1], args[2]);
  }
  if (name == "normal") {
    need(2);
    return Prior::normal(args[0], args[1]);
  }
  if (name == "cauchy") {
    need(2);
    return Prior::cauchy(args[0], args[1]);
  }
  if (name == "invgamma" || name == "inv_gamma") {
    need(2);
    return Prior::inv_gamma(args[0], args[1]);
  }
  if (name == "halfnormal") {
    need(1);
    return Prior::half_normal(args[0]);
  }
  if (name == "halfcauchy") {
    need(1);
    return Prior::half_cauchy(args[0]);
  }
  throw ValidationError("unknown prior family '" + name + "'");
}

struct PriorSpec {
  Prior effect = Prior::normal(0.0, 1.0);
  Prior heterogeneity = Prior::inv_gamma(1.0, 0.15);

  static PriorSpec make(Prior effect, Prior heterogeneity) {
    if (effect.positive_support())
      throw ValidationError("effect prior must be normal, t or cauchy", "priors.mu");
    if (!heterogeneity.positive_support())
      throw ValidationError("heterogeneity prior must be invgamma, halfnormal or halfcauchy",
                            "priors.tau");
    return {effect, heterogeneity};
  }
};

}  // namespace trialsynth

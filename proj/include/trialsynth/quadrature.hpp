#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "trialsynth/error.hpp"

namespace trialsynth::quadrature {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
};

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  int max_intervals = 2000;
};

namespace detail {

// 15-point Kronrod nodes on [-1, 1] (non-negative half) with the embedded
// 7-point Gauss rule at the odd positions.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gauss_kronrod(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double fsum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * fsum;
    if (j % 2 == 1) gauss += kWg[j / 2] * fsum;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (7/15) integration over consecutive
// segments [points[0], points[1]], ..., bisecting the segment with the largest
// error estimate until the summed error meets the tolerance.
template <class F>
Result integrate(F&& f, std::span<const double> points, const Options& opt = {}) {
  if (points.size() < 2) return {};
  std::priority_queue<detail::Segment> heap;
  Result r;
  auto push = [&](double a, double b) {
    auto s = detail::gauss_kronrod(f, a, b);
    r.evaluations += 15;
    heap.push(s);
  };
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    if (points[i + 1] > points[i]) push(points[i], points[i + 1]);

  auto totals = [&]() {
    // The heap is small; a copy keeps summation order deterministic.
    auto copy = heap;
    std::vector<detail::Segment> segs;
    segs.reserve(copy.size());
    while (!copy.empty()) {
      segs.push_back(copy.top());
      copy.pop();
    }
    std::sort(segs.begin(), segs.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    double v = 0.0, e = 0.0;
    for (const auto& s : segs) {
      v += s.value;
      e += s.error;
    }
    return std::pair{v, e};
  };

  int intervals = static_cast<int>(heap.size());
  double value = 0.0, error = 0.0;
  // Running sums for the loop test; exact totals are recomputed at the end.
  {
    auto [v, e] = totals();
    value = v;
    error = e;
  }
  while (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(value))) {
    if (intervals >= opt.max_intervals)
      throw NumericalError("adaptive quadrature did not converge; error estimate " + sci(error) + " on value " +
                               sci(value) + " after " + std::to_string(intervals) + " intervals",
                           error);
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval can no longer be split in double precision.
      worst.error = 0.0;
      heap.push(worst);
      auto [v, e] = totals();
      value = v;
      error = e;
      continue;
    }
    auto left = detail::gauss_kronrod(f, worst.a, mid);
    auto right = detail::gauss_kronrod(f, mid, worst.b);
    r.evaluations += 30;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
    if (error < 0.0) error = 0.0;
  }
  auto [v, e] = totals();
  r.value = v;
  r.abs_error = e;
  return r;
}

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  const std::array<double, 2> pts{a, b};
  return integrate(std::forward<F>(f), std::span<const double>(pts), opt);
}

struct LogResult {
  double log_value = -std::numeric_limits<double>::infinity();
  double rel_error = 0.0;
};

// Integrates exp(log_f) over the segments defined by sorted breakpoints. The
// integrand is rescaled by its maximum over a scan of each segment so that
// values far outside double range can be integrated.
template <class LogF>
LogResult integrate_log(LogF&& log_f, std::vector<double> points, const Options& opt = {},
                        int scan_per_segment = 24) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 2) return {};
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    for (int j = 0; j <= scan_per_segment; ++j) {
      const double x = points[i] + (points[i + 1] - points[i]) * j / scan_per_segment;
      const double v = log_f(x);
      if (v > peak) peak = v;
    }
  }
  if (!std::isfinite(peak)) return {};
  auto scaled = [&](double x) {
    const double v = log_f(x) - peak;
    return v < -745.0 ? 0.0 : std::exp(v);
  };
  const auto r = integrate(scaled, std::span<const double>(points), opt);
  LogResult out;
  if (!(r.value > 0.0)) return out;
  if (!std::isfinite(r.value) || !std::isfinite(r.abs_error))
    throw NumericalError("integrand peak lies outside the scanned breakpoints; rescaled integral overflowed",
                         r.value);
  out.log_value = peak + std::log(r.value);
  out.rel_error = r.abs_error / r.value;
  return out;
}

}  // namespace trialsynth::quadrature

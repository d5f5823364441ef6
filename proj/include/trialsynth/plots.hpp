#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "trialsynth/error.hpp"
#include "trialsynth/model.hpp"

namespace trialsynth {

struct ForestRow {
  std::string label;
  double y = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double weight_pct = 0.0;
  bool is_new = false;
};

struct ForestPooled {
  double y = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string label = "Pooled";
};

struct ForestPlotSpec {
  std::vector<ForestRow> rows;
  ForestPooled pooled;
  EffectScale scale = EffectScale::LogRiskRatio;
  std::string axis_label;
  std::string title;
};

struct DensityPlotSpec {
  std::vector<double> prior_grid;
  std::vector<double> prior_density;
  std::vector<double> posterior_grid;
  std::vector<double> posterior_density;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string x_label = "Effect size";
  std::string title;
  std::string prior_label = "Prior";
  std::string posterior_label = "Posterior";
};

// Affine map between data values and SVG user units.
struct AxisMap {
  double v0 = 0.0, v1 = 1.0;  // data range
  double p0 = 0.0, p1 = 1.0;  // pixel range (p1 < p0 for inverted axes)

  double to_px(double v) const { return p0 + (v - v0) / (v1 - v0) * (p1 - p0); }
  double from_px(double p) const { return v0 + (p - p0) / (p1 - p0) * (v1 - v0); }
};

struct ForestLayout {
  double width = 800.0;
  double height = 0.0;
  double row_height = 24.0;
  double top = 28.0;
  AxisMap x;
  double row_center(std::size_t i) const { return top + row_height * (static_cast<double>(i) + 0.5); }
};

struct FunnelLayout {
  double width = 600.0;
  double height = 450.0;
  AxisMap x;  // effect
  AxisMap y;  // standard error, 0 at the top
};

struct DensityLayout {
  double width = 640.0;
  double height = 400.0;
  AxisMap x;
  AxisMap y;
};

namespace svg {

inline std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// Coordinates: fixed six decimals keep output byte-stable and invertible.
inline std::string coord(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Labels: three decimals, no negative zero.
inline std::string label_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

inline std::string header(double w, double h) {
  char dims[96];
  std::snprintf(dims, sizeof dims, "width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\"", w, h, w, h);
  return std::string("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n") +
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" " + dims + ">\n";
}

inline std::string style() {
  return "<style type=\"text/css\"><![CDATA[\n"
         "text { font-family: 'DejaVu Sans', Arial, sans-serif; font-size: 12px; fill: #222; }\n"
         ".study-marker { fill: #333; stroke: none; }\n"
         ".ci { stroke: #333; stroke-width: 1.2; }\n"
         ".new-study { fill: #1f6fd1; stroke: #1f6fd1; }\n"
         ".pooled-diamond { fill: #111; stroke: #111; }\n"
         ".axis { stroke: #222; stroke-width: 1; fill: none; }\n"
         ".reference { stroke: #888; stroke-dasharray: 3,3; }\n"
         ".study-point { fill: #333; }\n"
         ".pooled-line { stroke: #111; }\n"
         ".funnel-line { stroke: #888; stroke-dasharray: 5,4; fill: none; }\n"
         ".prior { stroke: #555; stroke-width: 1.5; stroke-dasharray: 6,4; fill: none; }\n"
         ".posterior { stroke: #000; stroke-width: 2; fill: none; }\n"
         ".credible-region { fill: #777; fill-opacity: 0.35; stroke: none; }\n"
         "]]></style>\n";
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= target) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step)
    ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  return ticks;
}

inline void x_axis(std::ostringstream& o, const AxisMap& x, double y_px, const std::string& label) {
  o << "<g class=\"x-axis\">\n";
  o << "<line class=\"axis\" x1=\"" << coord(x.p0) << "\" y1=\"" << coord(y_px) << "\" x2=\""
    << coord(x.p1) << "\" y2=\"" << coord(y_px) << "\"/>\n";
  for (double t : nice_ticks(std::min(x.v0, x.v1), std::max(x.v0, x.v1))) {
    const double px = x.to_px(t);
    o << "<line class=\"axis\" x1=\"" << coord(px) << "\" y1=\"" << coord(y_px) << "\" x2=\""
      << coord(px) << "\" y2=\"" << coord(y_px + 3) << "\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    o << "<text x=\"" << coord(px) << "\" y=\"" << coord(y_px + 14)
      << "\" text-anchor=\"middle\">" << buf << "</text>\n";
  }
  o << "<text x=\"" << coord(0.5 * (x.p0 + x.p1)) << "\" y=\"" << coord(y_px + 27)
    << "\" text-anchor=\"middle\">" << escape(label) << "</text>\n";
  o << "</g>\n";
}

inline std::string path_data(const AxisMap& x, const AxisMap& y, const std::vector<double>& xs,
                             const std::vector<double>& ys) {
  std::string d;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d += (i == 0 ? "M" : " L");
    d += coord(x.to_px(xs[i]));
    d += ',';
    d += coord(y.to_px(ys[i]));
  }
  return d;
}

}  // namespace svg

inline ForestLayout forest_layout(const ForestPlotSpec& spec) {
  ForestLayout l;
  const auto rows = spec.rows.size() + 1;  // studies + pooled
  l.height = 60.0 + l.row_height * static_cast<double>(rows);
  double lo = std::min({0.0, spec.pooled.ci_low});
  double hi = std::max({0.0, spec.pooled.ci_high});
  for (const auto& r : spec.rows) {
    lo = std::min(lo, r.ci_low);
    hi = std::max(hi, r.ci_high);
  }
  const double pad = 0.05 * (hi - lo > 0.0 ? hi - lo : 1.0);
  l.x = {lo - pad, hi + pad, 250.0, 560.0};
  return l;
}

// Studies as weight-scaled squares with CI whiskers, the pooled estimate as a
// diamond spanning its CI. Rows with is_new carry the "new-study" class.
inline std::string render_forest(const ForestPlotSpec& spec) {
  if (spec.rows.empty()) throw ValidationError("forest plot needs at least one study row");
  for (std::size_t i = 0; i < spec.rows.size(); ++i) {
    const auto& r = spec.rows[i];
    if (!std::isfinite(r.y) || !std::isfinite(r.ci_low) || !std::isfinite(r.ci_high))
      throw ValidationError("forest row '" + r.label + "' has a non-finite estimate or CI",
                            "rows[" + std::to_string(i) + "]");
    if (!(r.weight_pct >= 0.0 && r.weight_pct <= 100.0))
      throw ValidationError("forest row '" + r.label + "' has a weight outside [0, 100]",
                            "rows[" + std::to_string(i) + "].weight_pct");
  }
  if (!std::isfinite(spec.pooled.y) || !std::isfinite(spec.pooled.ci_low) ||
      !std::isfinite(spec.pooled.ci_high))
    throw ValidationError("pooled estimate has a non-finite value or CI", "pooled");

  using namespace svg;
  const auto l = forest_layout(spec);
  const double half_h = 0.5 * l.row_height;
  std::ostringstream o;
  o << header(l.width, l.height) << style();
  if (!spec.title.empty())
    o << "<text x=\"" << coord(l.width / 2) << "\" y=\"13\" text-anchor=\"middle\" font-weight=\"bold\">"
      << escape(spec.title) << "</text>\n";
  o << "<text x=\"10\" y=\"" << coord(l.top - 5) << "\" font-weight=\"bold\">Study</text>\n";
  o << "<text x=\"580\" y=\"" << coord(l.top - 5) << "\" font-weight=\"bold\">Estimate [95% CI]</text>\n";
  o << "<text x=\"790\" y=\"" << coord(l.top - 5)
    << "\" text-anchor=\"end\" font-weight=\"bold\">Weight</text>\n";

  const double plot_bottom = l.row_center(spec.rows.size()) + half_h;
  const double zero = l.x.to_px(0.0);
  o << "<line class=\"reference\" x1=\"" << coord(zero) << "\" y1=\"" << coord(l.top) << "\" x2=\""
    << coord(zero) << "\" y2=\"" << coord(plot_bottom) << "\"/>\n";

  constexpr double kMaxSide = 18.0;
  for (std::size_t i = 0; i < spec.rows.size(); ++i) {
    const auto& r = spec.rows[i];
    const double cy = l.row_center(i);
    const std::string extra = r.is_new ? " new-study" : "";
    o << "<g class=\"study-row" << extra << "\">\n";
    o << "<text x=\"10\" y=\"" << coord(cy + 4) << "\">" << escape(r.label) << "</text>\n";
    o << "<line class=\"ci" << extra << "\" x1=\"" << coord(l.x.to_px(r.ci_low)) << "\" y1=\""
      << coord(cy) << "\" x2=\"" << coord(l.x.to_px(r.ci_high)) << "\" y2=\"" << coord(cy) << "\"/>\n";
    // Area proportional to weight.
    const double side = kMaxSide * std::sqrt(r.weight_pct / 100.0);
    o << "<rect class=\"study-marker" << extra << "\" x=\"" << coord(l.x.to_px(r.y) - side / 2)
      << "\" y=\"" << coord(cy - side / 2) << "\" width=\"" << coord(side) << "\" height=\""
      << coord(side) << "\"/>\n";
    o << "<text x=\"580\" y=\"" << coord(cy + 4) << "\">" << label_number(r.y) << " ["
      << label_number(r.ci_low) << ", " << label_number(r.ci_high) << "]</text>\n";
    char wbuf[32];
    std::snprintf(wbuf, sizeof wbuf, "%.1f%%", r.weight_pct);
    o << "<text x=\"790\" y=\"" << coord(cy + 4) << "\" text-anchor=\"end\">" << wbuf << "</text>\n";
    o << "</g>\n";
  }

  const double cy = l.row_center(spec.rows.size());
  const auto& p = spec.pooled;
  o << "<g class=\"pooled-row\">\n";
  o << "<text x=\"10\" y=\"" << coord(cy + 4) << "\" font-weight=\"bold\">" << escape(p.label)
    << "</text>\n";
  o << "<polygon class=\"pooled-diamond\" points=\"" << coord(l.x.to_px(p.ci_low)) << ','
    << coord(cy) << ' ' << coord(l.x.to_px(p.y)) << ',' << coord(cy - 7) << ' '
    << coord(l.x.to_px(p.ci_high)) << ',' << coord(cy) << ' ' << coord(l.x.to_px(p.y)) << ','
    << coord(cy + 7) << "\"/>\n";
  o << "<text x=\"580\" y=\"" << coord(cy + 4) << "\" font-weight=\"bold\">" << label_number(p.y)
    << " [" << label_number(p.ci_low) << ", " << label_number(p.ci_high) << "]</text>\n";
  o << "</g>\n";

  const std::string axis_label =
      spec.axis_label.empty() ? std::string(scale_label(spec.scale)) : spec.axis_label;
  x_axis(o, l.x, plot_bottom + 2, axis_label);
  o << "</svg>\n";
  return o.str();
}

struct FunnelPoint {
  double y = 0.0;
  double se = 1.0;
};

inline FunnelLayout funnel_layout(const std::vector<FunnelPoint>& points, double pooled_y) {
  FunnelLayout l;
  double se_max = 0.0;
  for (const auto& p : points) se_max = std::max(se_max, p.se);
  se_max *= 1.05;
  double lo = pooled_y - 1.959963984540054 * se_max;
  double hi = pooled_y + 1.959963984540054 * se_max;
  for (const auto& p : points) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }
  const double pad = 0.05 * (hi - lo);
  l.x = {lo - pad, hi + pad, 70.0, l.width - 20.0};
  l.y = {0.0, se_max, 30.0, l.height - 60.0};
  return l;
}

// Effect vs standard error (inverted axis) with the pseudo-95% funnel
// pooled_y +- 1.96 se.
inline std::string render_funnel(const std::vector<FunnelPoint>& points, double pooled_y,
                                 std::string_view axis_label = "Effect size") {
  if (points.empty()) throw ValidationError("funnel plot needs at least one estimate");
  for (const auto& p : points)
    if (!std::isfinite(p.y) || !(p.se > 0.0) || !std::isfinite(p.se))
      throw ValidationError("funnel plot points need finite estimates and positive standard errors");
  if (!std::isfinite(pooled_y)) throw ValidationError("pooled estimate must be finite");
  using namespace svg;
  const auto l = funnel_layout(points, pooled_y);
  std::ostringstream o;
  o << header(l.width, l.height) << style();
  const double top = l.y.p0, bottom = l.y.p1;
  const double se_max = l.y.v1;
  const double z = 1.959963984540054;
  o << "<polyline class=\"funnel-line\" points=\"" << coord(l.x.to_px(pooled_y - z * se_max)) << ','
    << coord(bottom) << ' ' << coord(l.x.to_px(pooled_y)) << ',' << coord(top) << ' '
    << coord(l.x.to_px(pooled_y + z * se_max)) << ',' << coord(bottom) << "\"/>\n";
  o << "<line class=\"pooled-line\" x1=\"" << coord(l.x.to_px(pooled_y)) << "\" y1=\"" << coord(top)
    << "\" x2=\"" << coord(l.x.to_px(pooled_y)) << "\" y2=\"" << coord(bottom) << "\"/>\n";
  for (const auto& p : points)
    o << "<circle class=\"study-point\" cx=\"" << coord(l.x.to_px(p.y)) << "\" cy=\""
      << coord(l.y.to_px(p.se)) << "\" r=\"4\"/>\n";
  x_axis(o, l.x, bottom, std::string(axis_label));
  // Standard-error axis, increasing downwards.
  o << "<g class=\"y-axis\">\n<line class=\"axis\" x1=\"" << coord(l.x.p0) << "\" y1=\"" << coord(top)
    << "\" x2=\"" << coord(l.x.p0) << "\" y2=\"" << coord(bottom) << "\"/>\n";
  for (double t : nice_ticks(0.0, se_max, 5)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    o << "<text x=\"" << coord(l.x.p0 - 6) << "\" y=\"" << coord(l.y.to_px(t) + 4)
      << "\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  o << "<text x=\"16\" y=\"" << coord(0.5 * (top + bottom)) << "\" transform=\"rotate(-90 16 "
    << coord(0.5 * (top + bottom)) << ")\" text-anchor=\"middle\">Standard error</text>\n</g>\n";
  o << "</svg>\n";
  return o.str();
}

inline DensityLayout density_layout(const DensityPlotSpec& spec) {
  DensityLayout l;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double top = 0.0;
  for (const auto* g : {&spec.prior_grid, &spec.posterior_grid}) {
    if (g->empty()) continue;
    lo = std::min(lo, g->front());
    hi = std::max(hi, g->back());
  }
  for (const auto* d : {&spec.prior_density, &spec.posterior_density})
    for (double v : *d) top = std::max(top, v);
  if (!(top > 0.0)) top = 1.0;
  l.x = {lo, hi, 60.0, l.width - 20.0};
  l.y = {0.0, top * 1.08, l.height - 60.0, 40.0};
  return l;
}

inline double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto i = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

// Dashed prior, solid posterior, shaded central credible interval, legend.
inline std::string render_density(const DensityPlotSpec& spec) {
  auto check_curve = [](const std::vector<double>& g, const std::vector<double>& d, const char* name) {
    if (g.size() < 2 || g.size() != d.size())
      throw ValidationError(std::string(name) + " curve needs matching grid and density of length >= 2", name);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]) || !std::isfinite(d[i]) || d[i] < 0.0)
        throw ValidationError(std::string(name) + " curve has non-finite or negative values", name);
      if (i > 0 && !(g[i] > g[i - 1]))
        throw ValidationError(std::string(name) + " grid must be strictly increasing", name);
    }
  };
  check_curve(spec.prior_grid, spec.prior_density, "prior");
  check_curve(spec.posterior_grid, spec.posterior_density, "posterior");
  if (!(spec.ci_low <= spec.ci_high) || spec.ci_low < spec.posterior_grid.front() ||
      spec.ci_high > spec.posterior_grid.back())
    throw ValidationError("credible interval must lie within the posterior grid", "ci");

  using namespace svg;
  const auto l = density_layout(spec);
  std::ostringstream o;
  o << header(l.width, l.height) << style();
  if (!spec.title.empty())
    o << "<text x=\"" << coord(l.width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-weight=\"bold\">"
      << escape(spec.title) << "</text>\n";

  // Shaded region under the posterior between the interval endpoints.
  std::vector<double> xs{spec.ci_low};
  for (double g : spec.posterior_grid)
    if (g > spec.ci_low && g < spec.ci_high) xs.push_back(g);
  xs.push_back(spec.ci_high);
  o << "<polygon class=\"credible-region\" points=\"" << coord(l.x.to_px(spec.ci_low)) << ','
    << coord(l.y.to_px(0.0));
  for (double x : xs)
    o << ' ' << coord(l.x.to_px(x)) << ','
      << coord(l.y.to_px(interpolate(spec.posterior_grid, spec.posterior_density, x)));
  o << ' ' << coord(l.x.to_px(spec.ci_high)) << ',' << coord(l.y.to_px(0.0)) << "\"/>\n";

  o << "<path class=\"prior\" d=\"" << path_data(l.x, l.y, spec.prior_grid, spec.prior_density)
    << "\"/>\n";
  o << "<path class=\"posterior\" d=\""
    << path_data(l.x, l.y, spec.posterior_grid, spec.posterior_density) << "\"/>\n";

  x_axis(o, l.x, l.y.p0, spec.x_label);
  o << "<line class=\"axis\" x1=\"" << coord(l.x.p0) << "\" y1=\"" << coord(l.y.p0) << "\" x2=\""
    << coord(l.x.p0) << "\" y2=\"" << coord(l.y.p1) << "\"/>\n";
  o << "<text x=\"16\" y=\"" << coord(0.5 * (l.y.p0 + l.y.p1)) << "\" transform=\"rotate(-90 16 "
    << coord(0.5 * (l.y.p0 + l.y.p1)) << ")\" text-anchor=\"middle\">Density</text>\n";

  const double lx = l.width - 190.0;
  o << "<g class=\"legend\">\n"
    << "<line class=\"prior\" x1=\"" << coord(lx) << "\" y1=\"50\" x2=\"" << coord(lx + 30)
    << "\" y2=\"50\"/>\n<text x=\"" << coord(lx + 38) << "\" y=\"54\">" << escape(spec.prior_label)
    << "</text>\n"
    << "<line class=\"posterior\" x1=\"" << coord(lx) << "\" y1=\"70\" x2=\"" << coord(lx + 30)
    << "\" y2=\"70\"/>\n<text x=\"" << coord(lx + 38) << "\" y=\"74\">"
    << escape(spec.posterior_label) << "</text>\n"
    << "<rect class=\"credible-region\" x=\"" << coord(lx) << "\" y=\"82\" width=\"30\" height=\"10\"/>\n"
    << "<text x=\"" << coord(lx + 38) << "\" y=\"92\">95% credible interval</text>\n</g>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace trialsynth

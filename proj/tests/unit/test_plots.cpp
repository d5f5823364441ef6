#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <functional>
#include <sstream>

#include "trialsynth/bayes.hpp"
#include "trialsynth/plots.hpp"

using namespace trialsynth;
namespace pt = boost::property_tree;

namespace {

struct Element {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::string text;
};

// Parses the SVG (throws on malformed XML) and flattens it in document order.
std::vector<Element> parse_svg(const std::string& svg) {
  std::istringstream in(svg);
  pt::ptree tree;
  pt::read_xml(in, tree);
  std::vector<Element> out;
  std::function<void(const std::string&, const pt::ptree&)> walk = [&](const std::string& name, const pt::ptree& node) {
    Element e{name, {}, node.data()};
    if (auto a = node.get_child_optional("<xmlattr>"))
      for (const auto& [k, v] : *a) e.attrs[k] = v.data();
    out.push_back(e);
    for (const auto& [k, child] : node)
      if (k != "<xmlattr>" && k != "<xmlcomment>") walk(k, child);
  };
  for (const auto& [k, child] : tree) walk(k, child);
  return out;
}

std::vector<Element> select(const std::vector<Element>& all, const std::string& name, const std::string& cls = {}) {
  std::vector<Element> out;
  for (const auto& e : all) {
    if (e.name != name) continue;
    if (!cls.empty()) {
      const auto it = e.attrs.find("class");
      if (it == e.attrs.end()) continue;
      std::istringstream words(it->second);
      bool hit = false;
      for (std::string w; words >> w;) hit |= w == cls;
      if (!hit) continue;
    }
    out.push_back(e);
  }
  return out;
}

double num(const Element& e, const std::string& key) { return std::stod(e.attrs.at(key)); }

std::vector<std::pair<double, double>> points(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::istringstream in(text);
  for (std::string tok; in >> tok;) {
    const auto comma = tok.find(',');
    out.emplace_back(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
  }
  return out;
}

ForestPlotSpec five_rows() {
  ForestPlotSpec s;
  s.rows = {{"Synthetic A 1998", -0.75, -1.5, 0.0, 30.0, false},
            {"Synthetic B 2002", -0.6, -1.6, 0.4, 15.0, false},
            {"Synthetic C 2006", -0.7, -1.3, -0.1, 40.0, false},
            {"Synthetic D 2011", -0.8, -2.1, 0.5, 10.0, false},
            {"Singh 2022 <new> & \"quoted\"", 0.05, -2.6, 2.7, 5.0, true}};
  s.pooled = {-0.7, -1.1, -0.3, "Fixed effect"};
  s.scale = EffectScale::LogRiskRatio;
  s.title = "Seizure recurrence";
  return s;
}

}  // namespace

TEST(Forest, ElementCountsAndAccent) {
  const auto svg = render_forest(five_rows());
  const auto all = parse_svg(svg);
  EXPECT_EQ(select(all, "rect", "study-marker").size(), 5u);
  EXPECT_EQ(select(all, "polygon", "pooled-diamond").size(), 1u);
  const auto accented = select(all, "rect", "new-study");
  ASSERT_EQ(accented.size(), 1u);
  EXPECT_EQ(select(all, "g", "new-study").size(), 1u);
  EXPECT_NE(svg.find("Singh 2022 &lt;new&gt; &amp; &quot;quoted&quot;"), std::string::npos);
  EXPECT_NE(svg.find("-0.700 [-1.100, -0.300]"), std::string::npos);
}

TEST(Forest, CanvasDimensions) {
  const auto all = parse_svg(render_forest(five_rows()));
  const auto& root = all.front();
  ASSERT_EQ(root.name, "svg");
  const double h = 60 + 24 * 6;
  EXPECT_EQ(num(root, "width"), 800);
  EXPECT_EQ(num(root, "height"), h);
  EXPECT_EQ(root.attrs.at("viewBox"), "0 0 800 " + std::to_string(static_cast<int>(h)));
  for (const auto& e : all) {
    for (const char* k : {"x", "x1", "x2", "cx"})
      if (e.attrs.count(k)) {
        EXPECT_GE(num(e, k), 0.0);
        EXPECT_LE(num(e, k), 800.0);
      }
    for (const char* k : {"y", "y1", "y2", "cy"})
      if (e.attrs.count(k)) {
        EXPECT_GE(num(e, k), 0.0);
        EXPECT_LE(num(e, k), h) << e.name << " " << e.text;
      }
  }
}

TEST(Forest, Deterministic) {
  EXPECT_EQ(render_forest(five_rows()), render_forest(five_rows()));
}

TEST(Forest, MarkerCentresInvertToEstimates) {
  const auto spec = five_rows();
  const auto layout = forest_layout(spec);
  const auto markers = select(parse_svg(render_forest(spec)), "rect", "study-marker");
  ASSERT_EQ(markers.size(), spec.rows.size());
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const double cx = num(markers[i], "x") + num(markers[i], "width") / 2;
    EXPECT_NEAR(layout.x.from_px(cx), spec.rows[i].y, 1e-6);
    const double area = num(markers[i], "width") * num(markers[i], "height");
    EXPECT_NEAR(area / spec.rows[i].weight_pct, 18.0 * 18.0 / 100.0, 1e-4);
  }
  const auto diamond = points(select(parse_svg(render_forest(spec)), "polygon", "pooled-diamond")[0].attrs.at("points"));
  EXPECT_NEAR(layout.x.from_px(diamond[0].first), spec.pooled.ci_low, 1e-6);
  EXPECT_NEAR(layout.x.from_px(diamond[2].first), spec.pooled.ci_high, 1e-6);
}

TEST(Forest, RejectsNonFiniteRows) {
  auto spec = five_rows();
  spec.rows[2].ci_high = INFINITY;
  try {
    render_forest(spec);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.path(), "rows[2]");
    EXPECT_NE(std::string(e.what()).find("Synthetic C 2006"), std::string::npos);
  }
  spec = five_rows();
  spec.rows[0].weight_pct = 120;
  EXPECT_THROW(render_forest(spec), ValidationError);
  EXPECT_THROW(render_forest(ForestPlotSpec{}), ValidationError);
}

TEST(Funnel, SymmetricSetIsMirroredAboutPooledLine) {
  std::vector<FunnelPoint> pts;
  for (double se : {0.1, 0.25, 0.4, 0.7}) {
    pts.push_back({-0.3 + 1.2 * se, se});
    pts.push_back({-0.3 - 1.2 * se, se});
  }
  const auto all = parse_svg(render_funnel(pts, -0.3, "log RR"));
  const auto circles = select(all, "circle", "study-point");
  ASSERT_EQ(circles.size(), pts.size());
  const auto line = select(all, "line", "pooled-line");
  ASSERT_EQ(line.size(), 1u);
  const double x0 = num(line[0], "x1");
  const auto layout = funnel_layout(pts, -0.3);
  EXPECT_NEAR(x0, layout.x.to_px(-0.3), 1e-6);
  for (std::size_t i = 0; i < circles.size(); i += 2) {
    EXPECT_NEAR(num(circles[i], "cx") - x0, x0 - num(circles[i + 1], "cx"), 2e-6);
    EXPECT_EQ(num(circles[i], "cy"), num(circles[i + 1], "cy"));
  }
  EXPECT_LT(num(circles[0], "cy"), num(circles[6], "cy"));
}

TEST(Funnel, RejectsBadPoints) {
  EXPECT_THROW(render_funnel({}, 0.0), ValidationError);
  EXPECT_THROW(render_funnel({{0.0, 0.0}}, 0.0), ValidationError);
  EXPECT_THROW(render_funnel({{0.0, 1.0}}, NAN), ValidationError);
}

TEST(Density, ShadedRegionSpansCredibleInterval) {
  const std::vector<EffectEstimate> es{{"a", -0.7, 0.3}, {"b", -0.5, 0.4}};
  const auto r = bma(es, PriorSpec::make(Prior::student_t(0, 0.58, 5), Prior::inv_gamma(1.74, 0.27)));
  DensityPlotSpec spec;
  spec.posterior_grid = r.mu_averaged.grid;
  spec.posterior_density = r.mu_averaged.density;
  spec.prior_grid = r.mu_averaged.grid;
  for (double x : spec.prior_grid) spec.prior_density.push_back(std::exp(Prior::student_t(0, 0.58, 5).log_density(x)));
  spec.ci_low = r.mu_averaged.summary.ci_low;
  spec.ci_high = r.mu_averaged.summary.ci_high;
  spec.x_label = "log(RR)";
  const auto svg = render_density(spec);
  const auto all = parse_svg(svg);
  const auto layout = density_layout(spec);
  const auto region = select(all, "polygon", "credible-region");
  ASSERT_EQ(region.size(), 1u);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [x, y] : points(region[0].attrs.at("points"))) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  EXPECT_NEAR(layout.x.from_px(lo), spec.ci_low, 1e-6);
  EXPECT_NEAR(layout.x.from_px(hi), spec.ci_high, 1e-6);
  EXPECT_EQ(select(all, "path", "prior").size(), 1u);
  EXPECT_EQ(select(all, "path", "posterior").size(), 1u);
  EXPECT_EQ(svg, render_density(spec));
}

TEST(Density, IdenticalCurvesAreLegal) {
  DensityPlotSpec spec;
  for (int i = 0; i <= 100; ++i) {
    const double x = -3 + 0.06 * i;
    spec.prior_grid.push_back(x);
    spec.prior_density.push_back(std::exp(-0.5 * x * x));
  }
  spec.posterior_grid = spec.prior_grid;
  spec.posterior_density = spec.prior_density;
  spec.ci_low = -1.96;
  spec.ci_high = 1.96;
  const auto all = parse_svg(render_density(spec));
  EXPECT_EQ(select(all, "polygon", "credible-region").size(), 1u);
  spec.ci_high = 5;
  EXPECT_THROW(render_density(spec), ValidationError);
  spec.ci_high = 1;
  spec.prior_grid[3] = spec.prior_grid[2];
  EXPECT_THROW(render_density(spec), ValidationError);
}

TEST(Axis, MapIsAffineAndInvertible) {
  const AxisMap m{-2.5, 1.5, 250, 560};
  const AxisMap inv{0, 3, 390, 30};
  for (double v : {-2.5, -1.0, 0.0, 0.37, 1.5, 7.0}) {
    EXPECT_NEAR(m.from_px(m.to_px(v)), v, 1e-12);
    EXPECT_NEAR(inv.from_px(inv.to_px(v)), v, 1e-12);
  }
  EXPECT_EQ(m.to_px(-2.5), 250);
  EXPECT_EQ(inv.to_px(0), 390);
}

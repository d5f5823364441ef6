#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trialsynth/bayes.hpp"
#include "trialsynth/classical.hpp"
#include "trialsynth/dataset.hpp"
#include "trialsynth/effectsize.hpp"
#include "trialsynth/error.hpp"
#include "trialsynth/model.hpp"
#include "trialsynth/plots.hpp"
#include "trialsynth/priors.hpp"

// Request/response model shared by the HTTP service and the CLI.

namespace trialsynth {

struct ClassicalBlock {
  PoolingMethod method = PoolingMethod::FixedIV;
  EffectScale scale = EffectScale::LogRiskRatio;
};

struct BayesianBlock {
  PriorSpec priors;
  std::array<double, 4> prior_model_probs{0.25, 0.25, 0.25, 0.25};
  EffectScale scale = EffectScale::LogRiskRatio;
};

struct AnalysisRequest {
  Selection selection;
  std::optional<ClassicalBlock> classical;
  std::optional<BayesianBlock> bayesian;

  EffectScale scale() const { return classical ? classical->scale : bayesian->scale; }
};

struct ClassicalOutput {
  PooledResult pooled;
  HeterogeneityStats heterogeneity;
  TransformedResult transformed;
  std::optional<EggerResult> egger;
  std::vector<Exclusion> mh_exclusions;
  // Per-estimate weight in percent, aligned with SetAnalysis::effects.estimates.
  std::vector<double> weight_pct;
};

struct BayesianOutput {
  BMAResult bma;
  PosteriorSummary mu_full_average;
};

struct SetAnalysis {
  StudySet set;
  EffectSet effects;
  std::optional<ClassicalOutput> classical;
  std::optional<BayesianOutput> bayesian;
};

struct AnalysisResponse {
  EffectScale scale = EffectScale::LogRiskRatio;
  std::optional<BayesianBlock> bayesian_request;
  std::vector<SetAnalysis> sets;
};

inline std::optional<PoolingMethod> parse_method(std::string_view s) {
  for (auto m : {PoolingMethod::FixedIV, PoolingMethod::FixedMH, PoolingMethod::RandomDL,
                 PoolingMethod::RandomREML})
    if (method_name(m) == s) return m;
  return std::nullopt;
}

inline std::optional<TargetGroup> parse_target(std::string_view s) {
  if (s == "group1") return TargetGroup::Group1;
  if (s == "group2") return TargetGroup::Group2;
  return std::nullopt;
}

inline std::string_view target_name(TargetGroup t) { return t == TargetGroup::Group1 ? "group1" : "group2"; }

// Builds a selection from flat lists (CLI flags, query parameters). Each
// subgroup id is attached to the listed meta-analysis that owns it; a
// meta-analysis without listed subgroups contributes all of them.
inline Selection build_selection(const DatabaseSnapshot& snapshot, const std::vector<std::string>& mas,
                                 const std::vector<std::string>& subgroups, TargetGroup target,
                                 bool pooled, EffectScale scale, const std::vector<std::string>& added) {
  Selection sel;
  sel.target_group = target;
  sel.pooled = pooled;
  sel.scale = scale;
  if (mas.empty()) throw ValidationError("select at least one meta-analysis", "ma");
  for (const auto& id : mas) {
    if (!snapshot.find_meta_analysis(id)) throw ValidationError("unknown meta-analysis '" + id + "'", "ma");
    sel.items.push_back({id, std::nullopt});
  }
  for (const auto& sg : subgroups) {
    bool placed = false;
    for (auto& item : sel.items) {
      const auto* ma = snapshot.find_meta_analysis(item.meta_analysis_id);
      for (const auto& g : ma->subgroups) {
        if (g.id != sg) continue;
        if (!item.subgroup_ids) item.subgroup_ids.emplace();
        item.subgroup_ids->push_back(sg);
        placed = true;
      }
    }
    if (!placed) throw ValidationError("no selected meta-analysis has subgroup '" + sg + "'", "subgroup");
  }
  for (const auto& a : added) sel.overlay.push_back(parse_overlay(a, scale));
  return sel;
}

// ---------------------------------------------------------------------------
// Computation

inline ClassicalOutput run_classical(const StudySet& set, const EffectSet& effects, const ClassicalBlock& block) {
  ClassicalOutput out;
  const auto& est = effects.estimates;
  if (est.empty()) throw ValidationError("no estimable studies in '" + set.name + "'", "selection");
  if (block.method == PoolingMethod::FixedMH) {
    std::vector<DichotomousCounts> tables;
    std::vector<std::string> labels;
    for (const auto& s : set.studies) {
      const auto* d = std::get_if<DichotomousCounts>(&s.data);
      if (!d)
        throw ValidationError("Mantel-Haenszel pooling needs raw counts; '" + s.label + "' has none",
                              "classical.method");
      tables.push_back(*d);
      labels.push_back(s.label);
    }
    auto mh = mantel_haenszel(tables, mh_scale_for(block.scale), labels);
    out.pooled = std::move(mh.pooled);
    out.mh_exclusions = std::move(mh.exclusions);
    std::vector<std::string> used;
    for (const auto& l : labels) {
      const bool excluded = std::any_of(out.mh_exclusions.begin(), out.mh_exclusions.end(),
                                        [&](const Exclusion& x) { return x.label == l; });
      if (!excluded) used.push_back(l);
    }
    for (const auto& e : est) {
      auto it = std::find(used.begin(), used.end(), e.label);
      out.weight_pct.push_back(it == used.end() ? 0.0 : out.pooled.weight_pct[it - used.begin()]);
    }
  } else {
    out.pooled = pool(est, block.method);
    out.weight_pct = out.pooled.weight_pct;
  }
  out.heterogeneity = heterogeneity(est);
  out.transformed = transform(out.pooled, block.scale);
  if (est.size() >= 3) {
    try {
      out.egger = egger_test(est);
    } catch (const ValidationError&) {
    }
  }
  return out;
}

inline BayesianOutput run_bayesian(const EffectSet& effects, const BayesianBlock& block) {
  BayesianMetaAnalysis engine(effects.estimates, block.priors);
  BayesianOutput out;
  out.bma = engine.bma(block.prior_model_probs);
  const auto& p = out.bma.posterior_probs;
  out.mu_full_average = summarize_with_null_mass(
      out.bma.mu_averaged, p[static_cast<int>(BayesModel::FixedNull)] + p[static_cast<int>(BayesModel::RandomNull)]);
  return out;
}

inline AnalysisResponse analyze(const DatabaseSnapshot& snapshot, const AnalysisRequest& request) {
  if (request.classical.has_value() == request.bayesian.has_value())
    throw ValidationError("exactly one of 'classical' or 'bayesian' is required");
  AnalysisResponse resp;
  resp.scale = request.scale();
  resp.bayesian_request = request.bayesian;
  for (auto& set : resolve_selection(snapshot, request.selection)) {
    SetAnalysis a;
    a.effects = compute_effects(set, resp.scale);
    if (a.effects.estimates.empty())
      throw ValidationError("no estimable studies in '" + set.name + "'", "selection");
    if (request.classical) a.classical = run_classical(set, a.effects, *request.classical);
    if (request.bayesian) a.bayesian = run_bayesian(a.effects, *request.bayesian);
    a.set = std::move(set);
    resp.sets.push_back(std::move(a));
  }
  return resp;
}

// ---------------------------------------------------------------------------
// Plot specs from results

inline const SetAnalysis& single_set(const AnalysisResponse& r) {
  if (r.sets.size() != 1)
    throw ValidationError("plots need a single study set; select one meta-analysis or set pooled", "selection.pooled");
  return r.sets.front();
}

inline ForestPlotSpec forest_spec(const AnalysisResponse& r) {
  const auto& a = single_set(r);
  if (!a.classical) throw ValidationError("forest plots need a 'classical' block", "classical");
  ForestPlotSpec spec;
  spec.scale = r.scale;
  spec.axis_label = std::string(scale_label(r.scale));
  spec.title = a.set.name;
  const auto& est = a.effects.estimates;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto& e = est[i];
    spec.rows.push_back({e.label, e.y, e.y - stats::kZ975 * e.se, e.y + stats::kZ975 * e.se,
                         a.classical->weight_pct[i], e.is_new});
  }
  const auto& p = a.classical->pooled;
  spec.pooled = {p.y, p.ci_low, p.ci_high, std::string(method_label(p.method))};
  return spec;
}

inline std::vector<FunnelPoint> funnel_points(const SetAnalysis& a) {
  std::vector<FunnelPoint> pts;
  for (const auto& e : a.effects.estimates) pts.push_back({e.y, e.se});
  return pts;
}

inline DensityPlotSpec density_spec(const AnalysisResponse& r, Parameter parameter = Parameter::Mu) {
  const auto& a = single_set(r);
  if (!a.bayesian || !r.bayesian_request)
    throw ValidationError("density plots need a 'bayesian' block", "bayesian");
  const auto& bma = a.bayesian->bma;
  const auto& post = parameter == Parameter::Mu ? bma.mu_averaged : bma.tau_averaged;
  const auto& prior = parameter == Parameter::Mu ? r.bayesian_request->priors.effect
                                                 : r.bayesian_request->priors.heterogeneity;
  DensityPlotSpec spec;
  spec.posterior_grid = post.grid;
  spec.posterior_density = post.density;
  spec.prior_grid = post.grid;
  for (double x : post.grid) spec.prior_density.push_back(prior.density(x));
  spec.ci_low = post.summary.ci_low;
  spec.ci_high = post.summary.ci_high;
  spec.x_label = parameter == Parameter::Mu ? std::string(scale_label(r.scale)) : "tau";
  spec.title = a.set.name;
  spec.prior_label = "Prior " + prior.to_string();
  spec.posterior_label = "Model-averaged posterior";
  return spec;
}

// ---------------------------------------------------------------------------
// JSON

namespace json_io {

using ojson = nlohmann::ordered_json;

// Field access on request bodies; failures become ValidationError with a path.
struct Fields {
  static const ojson* find(const ojson& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }
  static void require_object(const ojson& j, const std::string& path) {
    if (!j.is_object()) throw ValidationError("expected an object", path);
  }
  static std::string str(const ojson& j, const std::string& path) {
    if (!j.is_string()) throw ValidationError("expected a string", path);
    return j.get<std::string>();
  }
  static double number(const ojson& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError("expected a number", path);
    return j.get<double>();
  }
  static bool boolean(const ojson& j, const std::string& path) {
    if (!j.is_boolean()) throw ValidationError("expected true or false", path);
    return j.get<bool>();
  }
  static const ojson& array(const ojson& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError("expected an array", path);
    return j;
  }
};

inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline EffectScale scale_from(const ojson& j, const std::string& path) {
  const auto s = parse_scale(Fields::str(j, path));
  if (!s) throw ValidationError("unknown scale; expected logor, peto, logrr, rd, md or g", path);
  return *s;
}

inline Selection selection_from_json(const ojson& j, EffectScale scale) {
  using F = Fields;
  const std::string base = "selection";
  F::require_object(j, base);
  Selection sel;
  sel.scale = scale;
  const auto* items = F::find(j, "items");
  if (!items) throw ValidationError("missing field", base + ".items");
  F::array(*items, base + ".items");
  for (std::size_t i = 0; i < items->size(); ++i) {
    const auto path = at(base + ".items", i);
    const auto& it = (*items)[i];
    F::require_object(it, path);
    SelectionItem item;
    const auto* id = F::find(it, "meta_analysis_id");
    if (!id) throw ValidationError("missing field", path + ".meta_analysis_id");
    item.meta_analysis_id = F::str(*id, path + ".meta_analysis_id");
    if (const auto* sgs = F::find(it, "subgroup_ids"); sgs && !sgs->is_null()) {
      F::array(*sgs, path + ".subgroup_ids");
      item.subgroup_ids.emplace();
      for (std::size_t k = 0; k < sgs->size(); ++k)
        item.subgroup_ids->push_back(F::str((*sgs)[k], at(path + ".subgroup_ids", k)));
    }
    sel.items.push_back(std::move(item));
  }
  if (const auto* t = F::find(j, "target_group")) {
    const auto target = parse_target(F::str(*t, base + ".target_group"));
    if (!target) throw ValidationError("expected group1 or group2", base + ".target_group");
    sel.target_group = *target;
  }
  if (const auto* p = F::find(j, "pooled")) sel.pooled = F::boolean(*p, base + ".pooled");
  if (const auto* ov = F::find(j, "overlay")) {
    F::array(*ov, base + ".overlay");
    for (std::size_t i = 0; i < ov->size(); ++i) {
      const auto path = at(base + ".overlay", i);
      const auto& o = (*ov)[i];
      Study s;
      if (o.is_string()) {
        try {
          s = parse_overlay(o.get<std::string>(), scale);
        } catch (const ValidationError& e) {
          throw ValidationError(e.what(), path);
        }
      } else {
        try {
          s = corpus_json::study_from_json(o, path);
        } catch (const corpus_json::Reader::Failure& f) {
          throw ValidationError(f.message, f.path);
        }
      }
      s.is_new = true;
      sel.overlay.push_back(std::move(s));
    }
  }
  return sel;
}

inline AnalysisRequest request_from_json(const ojson& j) {
  using F = Fields;
  F::require_object(j, "");
  AnalysisRequest req;
  const auto* c = F::find(j, "classical");
  const auto* b = F::find(j, "bayesian");
  if ((c != nullptr) == (b != nullptr))
    throw ValidationError("exactly one of 'classical' or 'bayesian' is required", c ? "bayesian" : "classical");
  EffectScale scale;
  if (c) {
    F::require_object(*c, "classical");
    ClassicalBlock block;
    if (const auto* m = F::find(*c, "method")) {
      const auto method = parse_method(F::str(*m, "classical.method"));
      if (!method) throw ValidationError("expected fixed, mh, dl or reml", "classical.method");
      block.method = *method;
    }
    const auto* s = F::find(*c, "scale");
    if (!s) throw ValidationError("missing field", "classical.scale");
    block.scale = scale_from(*s, "classical.scale");
    scale = block.scale;
    req.classical = block;
  } else {
    F::require_object(*b, "bayesian");
    BayesianBlock block;
    const auto* s = F::find(*b, "scale");
    if (!s) throw ValidationError("missing field", "bayesian.scale");
    block.scale = scale_from(*s, "bayesian.scale");
    scale = block.scale;
    Prior mu = block.priors.effect, tau = block.priors.heterogeneity;
    if (const auto* pr = F::find(*b, "priors")) {
      F::require_object(*pr, "bayesian.priors");
      auto prior_at = [&](const char* key, Prior& out) {
        const auto path = std::string("bayesian.priors.") + key;
        if (const auto* v = F::find(*pr, key)) {
          try {
            out = parse_prior(F::str(*v, path));
          } catch (const ValidationError& e) {
            throw ValidationError(e.what(), path);
          }
        }
      };
      prior_at("mu", mu);
      prior_at("tau", tau);
    }
    try {
      block.priors = PriorSpec::make(mu, tau);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), "bayesian." + e.path());
    }
    if (const auto* probs = F::find(*b, "prior_model_probs")) {
      F::array(*probs, "bayesian.prior_model_probs");
      if (probs->size() != 4)
        throw ValidationError("expected four probabilities (fixed_null, fixed_alt, random_null, random_alt)",
                              "bayesian.prior_model_probs");
      for (std::size_t i = 0; i < 4; ++i)
        block.prior_model_probs[i] = F::number((*probs)[i], at("bayesian.prior_model_probs", i));
    }
    req.bayesian = block;
  }
  const auto* sel = F::find(j, "selection");
  if (!sel) throw ValidationError("missing field", "selection");
  req.selection = selection_from_json(*sel, scale);
  if (req.bayesian) {
    // Checked here so bad probabilities are reported before any computation.
    double total = 0.0;
    for (double q : req.bayesian->prior_model_probs) {
      if (!(q >= 0.0)) throw ValidationError("prior model probabilities must be non-negative", "bayesian.prior_model_probs");
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("prior model probabilities must sum to 1", "bayesian.prior_model_probs");
  }
  return req;
}

inline ojson request_to_json(const AnalysisRequest& r) {
  ojson j;
  ojson sel;
  sel["items"] = ojson::array();
  for (const auto& it : r.selection.items) {
    ojson i;
    i["meta_analysis_id"] = it.meta_analysis_id;
    if (it.subgroup_ids) i["subgroup_ids"] = *it.subgroup_ids;
    sel["items"].push_back(std::move(i));
  }
  sel["target_group"] = std::string(target_name(r.selection.target_group));
  sel["pooled"] = r.selection.pooled;
  sel["overlay"] = ojson::array();
  for (const auto& s : r.selection.overlay) sel["overlay"].push_back(corpus_json::study_to_json(s));
  j["selection"] = std::move(sel);
  if (r.classical) {
    j["classical"] = {{"method", std::string(method_name(r.classical->method))},
                      {"scale", std::string(scale_name(r.classical->scale))}};
  }
  if (r.bayesian) {
    j["bayesian"] = {{"priors",
                      {{"mu", r.bayesian->priors.effect.to_string()},
                       {"tau", r.bayesian->priors.heterogeneity.to_string()}}},
                     {"prior_model_probs", r.bayesian->prior_model_probs},
                     {"scale", std::string(scale_name(r.bayesian->scale))}};
  }
  return j;
}

inline ojson to_json(const PosteriorSummary& s) {
  return {{"mean", s.mean}, {"median", s.median}, {"ci_low", s.ci_low}, {"ci_high", s.ci_high}};
}

inline ojson to_json(const TransformedSummary& s) {
  return {{"mean", s.mean}, {"exp_of_mean", s.exp_of_mean}, {"median", s.median},
          {"ci_low", s.ci_low}, {"ci_high", s.ci_high}};
}

inline ojson to_json(const PosteriorDensity& d) {
  return {{"parameter", d.parameter == Parameter::Mu ? "mu" : "tau"},
          {"model", std::string(density_model_name(d.model))},
          {"summary", to_json(d.summary)},
          {"grid", d.grid},
          {"density", d.density}};
}

inline ojson to_json(const PooledResult& p) {
  return {{"method", std::string(method_name(p.method))},
          {"y", p.y}, {"se", p.se}, {"ci_low", p.ci_low}, {"ci_high", p.ci_high},
          {"z", p.z}, {"p", p.p}, {"k", p.k}, {"tau2", p.tau2}};
}

inline ojson to_json(const HeterogeneityStats& h) {
  return {{"q", h.q}, {"df", h.df}, {"p", h.p_q}, {"tau2", h.tau2}, {"i2", h.i2}, {"h2", h.h2}};
}

inline ojson to_json(const TransformedResult& t) {
  return {{"estimate", t.estimate}, {"ci_low", t.ci_low}, {"ci_high", t.ci_high},
          {"exponentiated", t.exponentiated}};
}

inline ojson to_json(const EggerResult& e) {
  return {{"intercept", e.intercept}, {"se", e.se_intercept}, {"t", e.t}, {"p", e.p}, {"df", e.df}};
}

inline ojson exclusions_json(const std::vector<Exclusion>& xs) {
  ojson a = ojson::array();
  for (const auto& x : xs) a.push_back({{"label", x.label}, {"reason", x.reason}});
  return a;
}

inline ojson to_json(const ClassicalOutput& c) {
  ojson j;
  j["method_label"] = std::string(method_label(c.pooled.method));
  j["heterogeneity"] = to_json(c.heterogeneity);
  j["pooled"] = to_json(c.pooled);
  j["transformed"] = to_json(c.transformed);
  j["egger"] = c.egger ? to_json(*c.egger) : ojson(nullptr);
  j["weights_pct"] = c.weight_pct;
  j["mh_exclusions"] = exclusions_json(c.mh_exclusions);
  return j;
}

inline ojson to_json(const BayesianOutput& out, const BayesianBlock& block, EffectScale scale) {
  const auto& r = out.bma;
  ojson j;
  j["priors"] = {{"mu", block.priors.effect.to_string()}, {"tau", block.priors.heterogeneity.to_string()}};
  j["models"] = ojson::array();
  for (auto m : kAllModels) {
    const int i = static_cast<int>(m);
    j["models"].push_back({{"model", std::string(model_name(m))},
                           {"prior_prob", r.marginals.prior_probs[i]},
                           {"log_marginal", r.marginals.log_marginal[i]},
                           {"posterior_prob", r.posterior_probs[i]}});
  }
  j["bayes_factors"] = {{"bf10_fixed", r.bf10_fixed},         {"bf10_random", r.bf10_random},
                        {"bf_rf", r.bf_rf},                   {"bf_inclusion", r.bf_inclusion},
                        {"log_bf10_fixed", r.log_bf10_fixed}, {"log_bf10_random", r.log_bf10_random},
                        {"log_bf_rf", r.log_bf_rf},           {"log_bf_inclusion", r.log_bf_inclusion}};
  j["fixed_weight"] = r.fixed_weight;
  j["mu"] = {{"fixed_alt", to_json(r.mu_fixed.summary)},
             {"random_alt", to_json(r.mu_random.summary)},
             {"averaged", to_json(r.mu_averaged.summary)},
             {"averaged_full", to_json(out.mu_full_average)}};
  if (is_log_scale(scale)) {
    j["mu_transformed"] = {{"fixed_alt", to_json(transform_posterior(r.mu_fixed))},
                           {"random_alt", to_json(transform_posterior(r.mu_random))},
                           {"averaged", to_json(transform_posterior(r.mu_averaged))}};
  }
  j["tau"] = {{"random_alt", to_json(r.tau_random.summary)},
              {"random_null", to_json(r.tau_random_null.summary)},
              {"averaged", to_json(r.tau_averaged.summary)}};
  j["densities"] = {{"mu_fixed", to_json(r.mu_fixed)},       {"mu_random", to_json(r.mu_random)},
                    {"mu_averaged", to_json(r.mu_averaged)}, {"tau_random", to_json(r.tau_random)},
                    {"tau_random_null", to_json(r.tau_random_null)}, {"tau_averaged", to_json(r.tau_averaged)}};
  return j;
}

inline ojson response_to_json(const AnalysisResponse& resp) {
  ojson j;
  j["scale"] = std::string(scale_name(resp.scale));
  j["sets"] = ojson::array();
  for (const auto& a : resp.sets) {
    ojson s;
    s["name"] = a.set.name;
    s["meta_analysis_ids"] = a.set.meta_analysis_ids;
    s["group1_label"] = a.set.group1_label;
    s["group2_label"] = a.set.group2_label;
    s["estimates"] = ojson::array();
    for (const auto& e : a.effects.estimates) {
      s["estimates"].push_back({{"label", e.label},
                                {"y", e.y},
                                {"se", e.se},
                                {"ci_low", e.y - stats::kZ975 * e.se},
                                {"ci_high", e.y + stats::kZ975 * e.se},
                                {"is_new", e.is_new}});
    }
    s["exclusions"] = exclusions_json(a.effects.exclusions);
    if (a.classical) s["classical"] = to_json(*a.classical);
    if (a.bayesian) s["bayesian"] = to_json(*a.bayesian, *resp.bayesian_request, resp.scale);
    j["sets"].push_back(std::move(s));
  }
  j["plots"] = {{"forest", "/api/plots/forest"}, {"funnel", "/api/plots/funnel"}, {"density", "/api/plots/density"}};
  return j;
}

// Plot specs posted directly to the plot endpoints.
inline std::vector<double> doubles(const ojson& j, const std::string& path) {
  Fields::array(j, path);
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(Fields::number(j[i], at(path, i)));
  return v;
}

inline const ojson& need(const ojson& j, const char* key, const std::string& path = {}) {
  const auto* v = Fields::find(j, key);
  const auto full = path.empty() ? std::string(key) : path + "." + key;
  if (!v) throw ValidationError("missing field", full);
  return *v;
}

inline ForestPlotSpec forest_spec_from_json(const ojson& j) {
  using F = Fields;
  ForestPlotSpec spec;
  const auto& rows = F::array(need(j, "rows"), "rows");
  if (rows.empty()) throw ValidationError("forest plot needs at least one row", "rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto p = at("rows", i);
    const auto& r = rows[i];
    F::require_object(r, p);
    ForestRow row;
    row.label = F::str(need(r, "label", p), p + ".label");
    row.y = F::number(need(r, "y", p), p + ".y");
    row.ci_low = F::number(need(r, "ci_low", p), p + ".ci_low");
    row.ci_high = F::number(need(r, "ci_high", p), p + ".ci_high");
    row.weight_pct = F::number(need(r, "weight_pct", p), p + ".weight_pct");
    if (const auto* n = F::find(r, "is_new")) row.is_new = F::boolean(*n, p + ".is_new");
    spec.rows.push_back(std::move(row));
  }
  const auto& pooled = need(j, "pooled");
  F::require_object(pooled, "pooled");
  spec.pooled.y = F::number(need(pooled, "y", "pooled"), "pooled.y");
  spec.pooled.ci_low = F::number(need(pooled, "ci_low", "pooled"), "pooled.ci_low");
  spec.pooled.ci_high = F::number(need(pooled, "ci_high", "pooled"), "pooled.ci_high");
  if (const auto* l = F::find(pooled, "label")) spec.pooled.label = F::str(*l, "pooled.label");
  if (const auto* s = F::find(j, "scale")) spec.scale = scale_from(*s, "scale");
  spec.axis_label = std::string(scale_label(spec.scale));
  if (const auto* a = F::find(j, "axis_label")) spec.axis_label = F::str(*a, "axis_label");
  if (const auto* t = F::find(j, "title")) spec.title = F::str(*t, "title");
  return spec;
}

struct FunnelInput {
  std::vector<FunnelPoint> points;
  double pooled_y = 0.0;
  std::string axis_label;
};

inline FunnelInput funnel_from_json(const ojson& j) {
  using F = Fields;
  FunnelInput in;
  const auto& pts = F::array(need(j, "points"), "points");
  if (pts.empty()) throw ValidationError("funnel plot needs at least one point", "points");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto p = at("points", i);
    F::require_object(pts[i], p);
    FunnelPoint fp{F::number(need(pts[i], "y", p), p + ".y"), F::number(need(pts[i], "se", p), p + ".se")};
    if (!(fp.se > 0.0)) throw ValidationError("must be positive", p + ".se");
    in.points.push_back(fp);
  }
  in.pooled_y = F::number(need(j, "pooled_y"), "pooled_y");
  in.axis_label = "Effect size";
  if (const auto* a = F::find(j, "axis_label")) in.axis_label = F::str(*a, "axis_label");
  return in;
}

inline DensityPlotSpec density_spec_from_json(const ojson& j) {
  using F = Fields;
  DensityPlotSpec spec;
  spec.prior_grid = doubles(need(j, "prior_grid"), "prior_grid");
  spec.prior_density = doubles(need(j, "prior_density"), "prior_density");
  spec.posterior_grid = doubles(need(j, "posterior_grid"), "posterior_grid");
  spec.posterior_density = doubles(need(j, "posterior_density"), "posterior_density");
  spec.ci_low = F::number(need(j, "ci_low"), "ci_low");
  spec.ci_high = F::number(need(j, "ci_high"), "ci_high");
  if (const auto* v = F::find(j, "x_label")) spec.x_label = F::str(*v, "x_label");
  if (const auto* v = F::find(j, "title")) spec.title = F::str(*v, "title");
  return spec;
}

}  // namespace json_io

}  // namespace trialsynth

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trialsynth/analysis.hpp"
#include "trialsynth/dataset.hpp"
#include "trialsynth/error.hpp"
#include "trialsynth/plots.hpp"
#include "trialsynth/rm5.hpp"
#include "trialsynth/search.hpp"
#include "trialsynth/service.hpp"

namespace trialsynth::cli {

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::Validation: return 2;
    case ErrorKind::NotFound: return 2;
    case ErrorKind::Numerical: return 3;
  }
  return 2;
}

namespace detail {

inline std::string fixed3(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

inline std::string pvalue(double p) { return p < 0.001 ? "<0.001" : fixed3(p); }

inline std::string pad(std::string s, std::size_t w, bool right = false) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

inline std::string interval(double lo, double hi) { return "[" + fixed3(lo) + ", " + fixed3(hi) + "]"; }

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
}

inline DatabaseSnapshot open_db(const std::string& path) {
  if (path.empty()) throw UsageError("no database given; pass --db or set WORKBENCH_DB");
  return load_database(path);
}

struct SelectionFlags {
  std::string db;
  std::vector<std::string> mas;
  std::vector<std::string> subgroups;
  std::string target = "group1";
  bool pooled = false;
  std::string scale;
  std::vector<std::string> added;
  bool json = false;

  void attach(CLI::App* app) {
    app->add_option("--db", db, "Corpus file (JSON lines)")->envname("WORKBENCH_DB");
    app->add_option("--ma", mas, "Meta-analysis id (repeatable)")->required();
    app->add_option("--subgroup", subgroups, "Subgroup id (repeatable; default: all subgroups)");
    app->add_option("--target", target, "Group placed in position 1")->check(CLI::IsMember({"group1", "group2"}));
    app->add_flag("--pooled", pooled, "Pool all selected meta-analyses into one study set");
    app->add_option("--scale", scale, "logor, peto, logrr, rd, md or g (default: logor or md by outcome kind)");
    app->add_option("--add", added,
                    "Add a study: \"LABEL:e1/n1,e2/n2\" (counts) or \"LABEL:y±se\" (estimate; \"+-\" also accepted)");
    app->add_flag("--json", json, "Print the service JSON response");
  }

  Selection selection(const DatabaseSnapshot& snap) const {
    EffectScale s = EffectScale::LogOddsRatio;
    if (!scale.empty()) {
      const auto parsed = parse_scale(scale);
      if (!parsed) throw UsageError("unknown scale '" + scale + "'", "scale");
      s = *parsed;
    } else if (!mas.empty()) {
      if (const auto* ma = snap.find_meta_analysis(mas.front()); ma && ma->outcome_kind == OutcomeKind::Continuous)
        s = EffectScale::MeanDifference;
    }
    return build_selection(snap, mas, subgroups, *parse_target(target), pooled, s, added);
  }
};

inline void print_estimates(std::ostream& out, const SetAnalysis& a, EffectScale scale,
                            const std::vector<double>* weights) {
  out << pad("Study", 28) << pad(std::string(scale_label(scale)), 10, true) << "  " << pad("95% CI", 18);
  if (weights) out << pad("Weight", 9, true);
  out << "\n";
  bool any_new = false;
  const auto& est = a.effects.estimates;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto& e = est[i];
    any_new |= e.is_new;
    out << pad(e.label + (e.is_new ? " *" : ""), 28) << pad(fixed3(e.y), 10, true) << "  "
        << pad(interval(e.y - stats::kZ975 * e.se, e.y + stats::kZ975 * e.se), 18);
    if (weights) out << pad(fixed3((*weights)[i]) + "%", 9, true);
    out << "\n";
  }
  for (const auto& x : a.effects.exclusions) out << pad(x.label, 28) << "  excluded: " << x.reason << "\n";
  if (any_new) out << "(* added study)\n";
}

inline void print_header(std::ostream& out, const SetAnalysis& a) {
  out << a.set.name << "\n";
  out << a.set.group1_label << " vs " << a.set.group2_label << "\n\n";
}

inline void print_classical(std::ostream& out, const AnalysisResponse& r) {
  for (const auto& a : r.sets) {
    const auto& c = *a.classical;
    print_header(out, a);
    out << "Method: " << method_label(c.pooled.method) << "\n\n";
    print_estimates(out, a, r.scale, &c.weight_pct);
    for (const auto& x : c.mh_exclusions) out << "Mantel-Haenszel excluded " << x.label << ": " << x.reason << "\n";
    const auto& p = c.pooled;
    out << "\nPooled estimate (" << scale_label(r.scale) << ")\n";
    out << "  estimate " << fixed3(p.y) << "  se " << fixed3(p.se) << "  95% CI " << interval(p.ci_low, p.ci_high)
        << "  z " << fixed3(p.z) << "  p " << pvalue(p.p) << "  k " << p.k << "\n";
    if (c.transformed.exponentiated) {
      const std::string name = r.scale == EffectScale::LogRiskRatio ? "RR" : "OR";
      out << "  " << name << " " << fixed3(c.transformed.estimate) << "  95% CI "
          << interval(c.transformed.ci_low, c.transformed.ci_high) << "\n";
    }
    const auto& h = c.heterogeneity;
    out << "\nHeterogeneity\n  Q " << fixed3(h.q) << "  df " << h.df << "  p " << pvalue(h.p_q) << "  tau^2 "
        << fixed3(h.tau2) << "  I^2 " << fixed3(h.i2) << "%  H^2 " << fixed3(h.h2) << "\n";
    if (p.method == PoolingMethod::RandomREML) out << "  tau^2 (REML) " << fixed3(p.tau2) << "\n";
    if (c.egger)
      out << "\nEgger's test\n  intercept " << fixed3(c.egger->intercept) << "  se " << fixed3(c.egger->se_intercept)
          << "  t " << fixed3(c.egger->t) << "  df " << c.egger->df << "  p " << pvalue(c.egger->p) << "\n";
    out << "\n";
  }
}

inline void print_summary_row(std::ostream& out, const std::string& name, const PosteriorSummary& s) {
  out << "  " << pad(name, 18) << pad(fixed3(s.mean), 9, true) << pad(fixed3(s.median), 9, true) << "  "
      << interval(s.ci_low, s.ci_high) << "\n";
}

inline void print_bayesian(std::ostream& out, const AnalysisResponse& r) {
  const auto& block = *r.bayesian_request;
  for (const auto& a : r.sets) {
    const auto& b = a.bayesian->bma;
    print_header(out, a);
    out << "Priors: mu ~ " << block.priors.effect.to_string() << ", tau ~ " << block.priors.heterogeneity.to_string()
        << "\n\n";
    print_estimates(out, a, r.scale, nullptr);
    out << "\n" << pad("Model", 14) << pad("P(M)", 9, true) << pad("P(M|data)", 11, true) << pad("log ML", 12, true)
        << "\n";
    for (auto m : kAllModels) {
      const int i = static_cast<int>(m);
      out << pad(std::string(model_name(m)), 14) << pad(fixed3(b.marginals.prior_probs[i]), 9, true)
          << pad(fixed3(b.posterior_probs[i]), 11, true) << pad(fixed3(b.marginals.log_marginal[i]), 12, true)
          << "\n";
    }
    out << "\nBayes factors\n  BF10 fixed " << fixed3(b.bf10_fixed) << "  BF10 random " << fixed3(b.bf10_random)
        << "  BF random/fixed " << fixed3(b.bf_rf) << "  BF inclusion " << fixed3(b.bf_inclusion) << "\n";
    out << "\nPosterior mu" << pad("mean", 16, true) << pad("median", 9, true) << "  95% CrI\n";
    print_summary_row(out, "fixed effects", b.mu_fixed.summary);
    print_summary_row(out, "random effects", b.mu_random.summary);
    print_summary_row(out, "averaged", b.mu_averaged.summary);
    if (is_log_scale(r.scale)) {
      const auto t = transform_posterior(b.mu_averaged);
      const std::string name = r.scale == EffectScale::LogRiskRatio ? "RR" : "OR";
      out << "  averaged " << name << " " << fixed3(std::exp(b.mu_averaged.summary.mean)) << "  95% CrI "
          << interval(t.ci_low, t.ci_high) << "\n";
    }
    out << "\nPosterior tau" << pad("mean", 15, true) << pad("median", 9, true) << "  95% CrI\n";
    print_summary_row(out, "random effects", b.tau_random.summary);
    print_summary_row(out, "averaged", b.tau_averaged.summary);
    out << "\n";
  }
}

}  // namespace detail

// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Clinical-trial meta-analysis workbench", "trialsynth"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Convert rm5 XML files into a corpus file");
  std::vector<std::string> ingest_files;
  std::string ingest_out;
  ingest->add_option("files", ingest_files, "rm5 XML files")->required();
  ingest->add_option("-o,--output", ingest_out, "Corpus file to write")->required();

  auto* search = app.add_subcommand("search", "List reviews by keyword, topic or title");
  std::string search_db, search_title;
  std::vector<std::string> search_keywords, search_topics;
  bool search_json = false;
  search->add_option("--db", search_db, "Corpus file")->envname("WORKBENCH_DB");
  auto* kw_opt = search->add_option("--keywords", search_keywords, "Keyword (repeatable, any match)");
  auto* topic_opt = search->add_option("--topics", search_topics, "Topic (repeatable, any match)");
  auto* title_opt = search->add_option("--title", search_title, "Case-insensitive title substring");
  kw_opt->excludes(topic_opt)->excludes(title_opt);
  topic_opt->excludes(title_opt);
  search->add_flag("--json", search_json, "Print JSON");

  auto* show = app.add_subcommand("show", "Show a review or meta-analysis");
  std::string show_db;
  std::vector<std::string> show_mas;
  std::string show_review;
  bool show_json = false;
  show->add_option("--db", show_db, "Corpus file")->envname("WORKBENCH_DB");
  show->add_option("--ma", show_mas, "Meta-analysis id (repeatable)");
  show->add_option("--review", show_review, "Review id (lists its meta-analyses)");
  show->add_flag("--json", show_json, "Print JSON");

  auto* analyze_cmd = app.add_subcommand("analyze", "Classical fixed or random-effects meta-analysis");
  SelectionFlags an;
  an.attach(analyze_cmd);
  std::string an_method = "fixed", an_csv, an_forest, an_funnel;
  analyze_cmd->add_option("--method", an_method, "fixed, mh, dl or reml")
      ->check(CLI::IsMember({"fixed", "mh", "dl", "reml"}));
  analyze_cmd->add_option("--csv", an_csv, "Write the selected studies as CSV");
  analyze_cmd->add_option("--forest", an_forest, "Write a forest plot (SVG)");
  analyze_cmd->add_option("--funnel", an_funnel, "Write a funnel plot (SVG)");

  auto* bayes_cmd = app.add_subcommand("bayes", "Bayesian model-averaged meta-analysis");
  SelectionFlags by;
  by.attach(bayes_cmd);
  std::string prior_mu = "normal(0,1)", prior_tau = "invgamma(1,0.15)", model_probs, by_density, by_csv;
  bayes_cmd->add_option("--prior-mu", prior_mu,
                        "Effect prior: t(loc,scale,df), normal(m,sd) or cauchy(loc,scale)")
      ->capture_default_str();
  bayes_cmd->add_option("--prior-tau", prior_tau,
                        "Heterogeneity prior: invgamma(shape,scale), halfnormal(sd) or halfcauchy(scale)")
      ->capture_default_str();
  bayes_cmd->add_option("--model-probs", model_probs,
                        "Prior model probabilities fixed_null,fixed_alt,random_null,random_alt (default: equal)");
  bayes_cmd->add_option("--density", by_density, "Write the model-averaged prior/posterior density plot (SVG)");
  bayes_cmd->add_option("--csv", by_csv, "Write the selected studies as CSV");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  std::string serve_db;
  ServeOptions serve_opt;
  serve_cmd->add_option("--db", serve_db, "Corpus file")->envname("WORKBENCH_DB");
  serve_cmd->add_option("--port", serve_opt.port, "Port")->capture_default_str()->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--host", serve_opt.host, "Address to bind")->capture_default_str();
  serve_cmd->add_option("--static", serve_opt.static_dir, "Directory served at /");
  serve_cmd->add_option("--cors-origin", serve_opt.cors_origin, "Access-Control-Allow-Origin value")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    err << app.help();
    return 1;
  }

  try {
    if (*ingest) {
      std::vector<Review> reviews;
      for (const auto& f : ingest_files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw ValidationError("cannot open '" + f + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        Rm5Result r;
        try {
          r = parse_rm5_subset(buf.str(), std::filesystem::path(f).stem().string());
        } catch (const ValidationError& e) {
          throw ValidationError(f + ": " + e.what(), e.path());
        }
        for (const auto& w : r.warnings) err << f << ": warning: " << w << "\n";
        reviews.push_back(std::move(r.review));
      }
      const auto snap = DatabaseSnapshot::from_reviews(std::move(reviews));
      save_database(snap, ingest_out);
      const auto c = snap.counts();
      out << "wrote " << ingest_out << ": " << c.reviews << " reviews, " << c.meta_analyses << " meta-analyses, "
          << c.studies << " studies\n";
      return 0;
    }

    if (*search) {
      const auto snap = open_db(search_db);
      const auto index = build_index(snap);
      std::vector<std::string> ids;
      if (!search_keywords.empty()) ids = filter_reviews(index, FilterMode::Keywords, search_keywords);
      else if (!search_topics.empty()) ids = filter_reviews(index, FilterMode::Topics, search_topics);
      else ids = filter_reviews(index, FilterMode::Title, std::vector<std::string>{search_title});
      if (search_json) {
        json_io::ojson arr = json_io::ojson::array();
        for (const auto& id : ids) {
          const auto* r = snap.find_review(id);
          arr.push_back({{"id", r->id}, {"title", r->title}, {"year", r->year}});
        }
        out << arr.dump(2) << "\n";
        return 0;
      }
      for (const auto& id : ids) {
        const auto* r = snap.find_review(id);
        out << pad(r->id, 16) << r->year << "  " << r->title << "\n";
      }
      if (ids.empty()) out << "no matching reviews\n";
      return 0;
    }

    if (*show) {
      const auto snap = open_db(show_db);
      if (show_mas.empty() && show_review.empty()) throw UsageError("show needs --ma or --review");
      std::vector<std::string> mas = show_mas;
      if (!show_review.empty()) {
        const auto* r = snap.find_review(show_review);
        if (!r) throw NotFoundError("unknown review id '" + show_review + "'", "review");
        for (const auto& ma : r->meta_analyses) mas.push_back(ma.id);
      }
      json_io::ojson arr = json_io::ojson::array();
      for (const auto& id : mas) {
        const auto* ma = snap.find_meta_analysis(id);
        if (!ma) throw NotFoundError("unknown meta-analysis '" + id + "'", "ma");
        const auto& review = snap.review_of(*ma);
        if (show_json) {
          json_io::ojson j;
          j["review_id"] = review.id;
          j["review_title"] = review.title;
          j["id"] = ma->id;
          j["name"] = ma->name;
          j["outcome_kind"] = std::string(kind_name(ma->outcome_kind));
          j["group1_label"] = ma->group1_label;
          j["group2_label"] = ma->group2_label;
          j["subgroups"] = json_io::ojson::array();
          for (const auto& sg : ma->subgroups) {
            json_io::ojson g{{"id", sg.id}, {"name", sg.name}, {"studies", json_io::ojson::array()}};
            for (const auto& s : sg.studies) g["studies"].push_back(corpus_json::study_to_json(s));
            j["subgroups"].push_back(std::move(g));
          }
          arr.push_back(std::move(j));
          continue;
        }
        out << ma->id << "  " << ma->name << "\n";
        out << "  review: " << review.title << " (" << review.year << ")\n";
        out << "  " << kind_name(ma->outcome_kind) << ", group 1: " << ma->group1_label
            << ", group 2: " << ma->group2_label << "\n";
        for (const auto& sg : ma->subgroups) {
          out << "  subgroup " << sg.id << "  " << sg.name << "\n";
          for (const auto& s : sg.studies) {
            out << "    " << pad(s.label, 28);
            if (const auto* d = std::get_if<DichotomousCounts>(&s.data))
              out << d->events1 << "/" << d->total1 << " vs " << d->events2 << "/" << d->total2;
            else if (const auto* c = std::get_if<ContinuousSummaries>(&s.data))
              out << fixed3(c->mean1) << " (" << fixed3(c->sd1) << ", n=" << c->n1 << ") vs " << fixed3(c->mean2)
                  << " (" << fixed3(c->sd2) << ", n=" << c->n2 << ")";
            else {
              const auto& e = std::get<PrecomputedEstimate>(s.data);
              out << fixed3(e.y) << " (se " << fixed3(e.se) << ", " << scale_name(e.scale) << ")";
            }
            out << "\n";
          }
        }
      }
      if (show_json) out << arr.dump(2) << "\n";
      return 0;
    }

    if (*analyze_cmd) {
      const auto snap = open_db(an.db);
      AnalysisRequest req;
      req.selection = an.selection(snap);
      req.classical = ClassicalBlock{*parse_method(an_method), req.selection.scale};
      const auto resp = analyze(snap, req);
      if (!an_csv.empty()) write_file(an_csv, export_csv(resolve_selection(snap, req.selection)));
      if (!an_forest.empty()) write_file(an_forest, render_forest(forest_spec(resp)));
      if (!an_funnel.empty()) {
        const auto& a = single_set(resp);
        write_file(an_funnel,
                   render_funnel(funnel_points(a), a.classical->pooled.y, std::string(scale_label(resp.scale))));
      }
      if (an.json) out << json_io::response_to_json(resp).dump() << "\n";
      else print_classical(out, resp);
      return 0;
    }

    if (*bayes_cmd) {
      const auto snap = open_db(by.db);
      AnalysisRequest req;
      req.selection = by.selection(snap);
      BayesianBlock block;
      block.scale = req.selection.scale;
      Prior mu, tau;
      try {
        mu = parse_prior(prior_mu);
      } catch (const ValidationError& e) {
        throw UsageError(std::string("--prior-mu: ") + e.what());
      }
      try {
        tau = parse_prior(prior_tau);
      } catch (const ValidationError& e) {
        throw UsageError(std::string("--prior-tau: ") + e.what());
      }
      block.priors = PriorSpec::make(mu, tau);
      if (!model_probs.empty()) {
        std::vector<double> v;
        std::stringstream ss(model_probs);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          double x = 0.0;
          auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
          if (ec != std::errc{} || ptr != tok.data() + tok.size())
            throw UsageError("--model-probs: malformed number '" + tok + "'");
          v.push_back(x);
        }
        if (v.size() != 4) throw UsageError("--model-probs needs four comma-separated values");
        std::copy(v.begin(), v.end(), block.prior_model_probs.begin());
      }
      req.bayesian = block;
      const auto resp = analyze(snap, req);
      if (!by_csv.empty()) write_file(by_csv, export_csv(resolve_selection(snap, req.selection)));
      if (!by_density.empty()) write_file(by_density, render_density(density_spec(resp)));
      if (by.json) out << json_io::response_to_json(resp).dump() << "\n";
      else print_bayesian(out, resp);
      return 0;
    }

    if (*serve_cmd) {
      auto snap = std::make_shared<const DatabaseSnapshot>(open_db(serve_db));
      Service service(snap, serve_db);
      const auto c = snap->counts();
      err << "serving " << c.reviews << " reviews on http://" << serve_opt.host << ":" << serve_opt.port << "\n";
      serve(service, serve_opt);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what();
    if (!e.path().empty()) err << " (" << e.path() << ")";
    err << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace trialsynth::cli

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "trialsynth/analysis.hpp"
#include "trialsynth/dataset.hpp"
#include "trialsynth/error.hpp"
#include "trialsynth/plots.hpp"
#include "trialsynth/search.hpp"

namespace trialsynth {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

using QueryParams = std::multimap<std::string, std::string>;

inline int http_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return 400;
    case ErrorKind::Validation: return 422;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Numerical: return 500;
  }
  return 500;
}

inline std::string_view error_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "bad_request";
    case ErrorKind::Validation: return "validation_error";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Numerical: return "numerical_error";
  }
  return "internal_error";
}

inline HttpResponse error_response(int status, std::string_view code, const std::string& message,
                                   const std::string& path = {}) {
  json_io::ojson e;
  e["code"] = std::string(code);
  e["message"] = message;
  if (!path.empty()) e["path"] = path;
  json_io::ojson body;
  body["error"] = std::move(e);
  return {status, "application/json", body.dump(), {}};
}

// Stateless request handler over an immutable snapshot. The snapshot can be
// replaced between requests; in-flight requests keep the one they started with.
class Service {
 public:
  struct State {
    SnapshotPtr snapshot;
    SearchIndex index;
  };

  explicit Service(SnapshotPtr snapshot, std::string db_path = {}) : db_path_(std::move(db_path)) {
    replace(std::move(snapshot));
  }

  std::shared_ptr<const State> state() const {
    std::lock_guard lock(mutex_);
    return state_;
  }

  void replace(SnapshotPtr snapshot) {
    auto next = std::make_shared<State>();
    next->index = build_index(*snapshot);
    next->snapshot = std::move(snapshot);
    std::lock_guard lock(mutex_);
    state_ = std::move(next);
  }

  // Re-reads the database file given at construction.
  DatabaseSnapshot::Counts reload() {
    if (db_path_.empty()) throw UsageError("service was started without a database path");
    auto snap = std::make_shared<const DatabaseSnapshot>(load_database(db_path_));
    const auto counts = snap->counts();
    replace(std::move(snap));
    return counts;
  }

  HttpResponse handle(std::string_view method, std::string_view path, const QueryParams& query,
                      std::string_view body) {
    try {
      return route(method, path, query, body);
    } catch (const NumericalError& e) {
      json_io::ojson err;
      err["code"] = std::string(error_code(ErrorKind::Numerical));
      err["message"] = e.what();
      err["last_value"] = e.last_value();
      json_io::ojson out;
      out["error"] = std::move(err);
      return {500, "application/json", out.dump(), {}};
    } catch (const Error& e) {
      return error_response(http_status(e.kind()), error_code(e.kind()), e.what(), e.path());
    } catch (const std::exception& e) {
      return error_response(500, "internal_error", e.what());
    }
  }

 private:
  static std::vector<std::string> values(const QueryParams& q, const std::string& key) {
    std::vector<std::string> out;
    auto [b, e] = q.equal_range(key);
    for (auto it = b; it != e; ++it) out.push_back(it->second);
    return out;
  }

  static std::string value(const QueryParams& q, const std::string& key, std::string fallback = {}) {
    auto it = q.find(key);
    return it == q.end() ? fallback : it->second;
  }

  static json_io::ojson parse_body(std::string_view body) {
    try {
      return json_io::ojson::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("request body is not valid JSON: ") + e.what(), "body");
    }
  }

  static HttpResponse json(const json_io::ojson& j) { return {200, "application/json", j.dump(), {}}; }
  static HttpResponse svg(std::string text) { return {200, "image/svg+xml", std::move(text), {}}; }

  HttpResponse route(std::string_view method, std::string_view path, const QueryParams& query,
                     std::string_view body) {
    const auto st = state();
    const bool get = method == "GET", post = method == "POST";
    if (path == "/api/health" && get) {
      const auto c = st->snapshot->counts();
      return json({{"status", "ok"}, {"reviews", c.reviews}, {"meta_analyses", c.meta_analyses}, {"studies", c.studies}});
    }
    if (path == "/api/reviews" && get) return reviews(*st, query);
    if (path == "/api/meta-analyses" && get) return meta_analyses(*st, query);
    if (path == "/api/analyze" && post) {
      const auto req = json_io::request_from_json(parse_body(body));
      return json(json_io::response_to_json(analyze(*st->snapshot, req)));
    }
    if (path.rfind("/api/plots/", 0) == 0 && post) return plot(*st, path.substr(11), body);
    if (path == "/api/export.csv" && get) return export_csv_endpoint(*st, query);
    if (path == "/api/admin/reload" && post) {
      const auto c = reload();
      return json({{"status", "reloaded"}, {"reviews", c.reviews}, {"meta_analyses", c.meta_analyses}, {"studies", c.studies}});
    }
    const bool known = path == "/api/health" || path == "/api/reviews" || path == "/api/meta-analyses" ||
                       path == "/api/analyze" || path == "/api/export.csv" || path == "/api/admin/reload" ||
                       path.rfind("/api/plots/", 0) == 0;
    if (known) return error_response(405, "method_not_allowed", "method " + std::string(method) + " not allowed");
    return error_response(404, "not_found", "no endpoint " + std::string(path));
  }

  static HttpResponse reviews(const State& st, const QueryParams& query) {
    const auto mode_text = value(query, "mode", "title");
    const auto mode = parse_filter_mode(mode_text);
    if (!mode) throw UsageError("mode must be topics, keywords or title", "mode");
    auto q = values(query, "q");
    if (q.empty()) q.emplace_back();
    json_io::ojson out = json_io::ojson::array();
    for (const auto& id : filter_reviews(st.index, *mode, q)) {
      const auto* r = st.snapshot->find_review(id);
      out.push_back({{"id", r->id}, {"title", r->title}, {"year", r->year}});
    }
    return json(out);
  }

  static HttpResponse meta_analyses(const State& st, const QueryParams& query) {
    auto ids = values(query, "review_id");
    std::erase_if(ids, [](const std::string& s) { return s.empty(); });
    if (ids.empty()) throw UsageError("review_id is required", "review_id");
    json_io::ojson out = json_io::ojson::array();
    for (const auto& row : list_meta_analyses(*st.snapshot, ids)) {
      json_io::ojson sgs = json_io::ojson::array();
      for (std::size_t i = 0; i < row.subgroup_ids.size(); ++i)
        sgs.push_back({{"id", row.subgroup_ids[i]}, {"name", row.subgroup_names[i]}});
      out.push_back({{"review_id", row.review_id},
                     {"review_title", row.review_title},
                     {"review_year", row.review_year},
                     {"id", row.meta_analysis_id},
                     {"name", row.name},
                     {"outcome_kind", row.outcome_kind},
                     {"group1_label", row.group1_label},
                     {"group2_label", row.group2_label},
                     {"study_count", row.study_count},
                     {"subgroups", std::move(sgs)}});
    }
    return json(out);
  }

  static HttpResponse plot(const State& st, std::string_view kind, std::string_view body) {
    if (kind != "forest" && kind != "funnel" && kind != "density")
      return error_response(404, "not_found", "unknown plot kind '" + std::string(kind) + "'");
    const auto j = parse_body(body);
    json_io::Fields::require_object(j, "");
    const bool is_request = j.contains("selection") || j.contains("classical") || j.contains("bayesian");
    if (kind == "forest") {
      if (!is_request) return svg(render_forest(json_io::forest_spec_from_json(j)));
      return svg(render_forest(forest_spec(analyze(*st.snapshot, json_io::request_from_json(j)))));
    }
    if (kind == "funnel") {
      if (!is_request) {
        const auto in = json_io::funnel_from_json(j);
        return svg(render_funnel(in.points, in.pooled_y, in.axis_label));
      }
      const auto resp = analyze(*st.snapshot, json_io::request_from_json(j));
      const auto& a = single_set(resp);
      if (!a.classical) throw ValidationError("funnel plots need a 'classical' block", "classical");
      return svg(render_funnel(funnel_points(a), a.classical->pooled.y, std::string(scale_label(resp.scale))));
    }
    if (!is_request) return svg(render_density(json_io::density_spec_from_json(j)));
    const auto req = json_io::request_from_json(j);
    if (!req.bayesian) throw ValidationError("density plots need a 'bayesian' block", "bayesian");
    return svg(render_density(density_spec(analyze(*st.snapshot, req))));
  }

  static HttpResponse export_csv_endpoint(const State& st, const QueryParams& query) {
    const auto mas = values(query, "ma");
    if (mas.empty()) throw ValidationError("select at least one meta-analysis", "ma");
    const auto target = parse_target(value(query, "target", "group1"));
    if (!target) throw ValidationError("expected group1 or group2", "target");
    const auto pooled_text = value(query, "pooled", "false");
    if (pooled_text != "true" && pooled_text != "false") throw ValidationError("expected true or false", "pooled");
    const auto scale = parse_scale(value(query, "scale", "logrr"));
    if (!scale) throw ValidationError("unknown scale", "scale");
    const auto sel = build_selection(*st.snapshot, mas, values(query, "subgroup"), *target,
                                     pooled_text == "true", *scale, values(query, "add"));
    HttpResponse r{200, "text/csv", export_csv(resolve_selection(*st.snapshot, sel)), {}};
    r.headers.emplace_back("Content-Disposition", "attachment; filename=\"selection.csv\"");
    return r;
  }

  std::string db_path_;
  mutable std::mutex mutex_;
  std::shared_ptr<const State> state_;
};

struct ServeOptions {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string static_dir;
  std::string cors_origin = "*";
};

// Registers the API routes, CORS headers and the optional static mount.
// The service and options must outlive the server.
inline void install_routes(httplib::Server& svr, Service& service, const ServeOptions& opt) {
  auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.path, req.params, req.body);
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body, r.content_type);
  };
  svr.set_post_routing_handler([&opt](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", opt.cors_origin);
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
  });
  svr.Get(R"(/api/.*)", dispatch);
  svr.Post(R"(/api/.*)", dispatch);
  svr.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  if (!opt.static_dir.empty() && !svr.set_mount_point("/", opt.static_dir))
    throw UsageError("static directory '" + opt.static_dir + "' does not exist", "static");
}

// Blocks until the server stops.
inline void serve(Service& service, const ServeOptions& opt) {
  httplib::Server svr;
  install_routes(svr, service, opt);
  if (!svr.listen(opt.host, opt.port))
    throw UsageError("cannot listen on " + opt.host + ":" + std::to_string(opt.port), "port");
}

}  // namespace trialsynth

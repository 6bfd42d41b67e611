#pragma once

#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "stylerec/error.hpp"
#include "stylerec/pipeline.hpp"
#include "stylerec/recommend.hpp"

namespace stylerec {

// Read-only query server over prebuilt artifacts. All state is loaded at
// startup and never mutated, so handlers run lock-free.
struct ServiceState {
  Artifacts artifacts;
  nlohmann::json metadata;
  std::vector<std::string> missing;

  static ServiceState from_loaded(LoadedArtifacts loaded) {
    return {std::move(loaded.artifacts), std::move(loaded.metadata),
            std::move(loaded.missing)};
  }
};

inline nlohmann::json health_body(const ServiceState& state) {
  const Artifacts& a = state.artifacts;
  nlohmann::json artifacts = {
      {"palettes", a.palettes.size()},
      {"color_matrices", a.color_matrices.size()},
      {"pattern_matrices", a.pattern_matrices.size()},
      {"joint_tables", a.joint_tables.size()},
      {"catalog_items", a.catalog ? nlohmann::json(a.catalog->size())
                                  : nlohmann::json(nullptr)},
      {"inventory_features",
       a.inventory_features ? nlohmann::json(a.inventory_features->size())
                            : nlohmann::json(nullptr)}};
  return {{"status", state.missing.empty() ? "ok" : "degraded"},
          {"artifacts", artifacts},
          {"missing", state.missing},
          {"build", state.metadata}};
}

inline void register_routes(httplib::Server& server,
                            const ServiceState& state) {
  server.Get("/v1/health", [&state](const httplib::Request&,
                                    httplib::Response& res) {
    res.set_content(health_body(state).dump(), "application/json");
  });

  server.Post("/v1/recommend", [&state](const httplib::Request& req,
                                        httplib::Response& res) {
    auto error_body = [](const std::string& kind, const std::string& message) {
      return nlohmann::json{{"error", kind}, {"message", message}}.dump();
    };
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      res.set_content(error_body("parse", "request body is not valid JSON"),
                      "application/json");
      return;
    }
    try {
      Query q = query_from_json(body);
      Recommendation rec = recommend_query(q, state.artifacts);
      res.set_content(to_json(rec).dump(), "application/json");
    } catch (const NotFoundError& e) {
      res.status = 503;
      res.set_content(error_body("missing_artifact", e.what()),
                      "application/json");
    } catch (const QueryError& e) {
      res.status = 422;
      res.set_content(error_body("query", e.what()), "application/json");
    } catch (const UsageError& e) {
      res.status = 400;
      res.set_content(error_body("usage", e.what()), "application/json");
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(error_body("invalid", e.what()), "application/json");
    }
  });
}

}  // namespace stylerec

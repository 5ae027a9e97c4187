#pragma once

// HTTP face of the pipeline. Routes mirror the CLI subcommands; bodies are
// canonical JSON. Chain-mutating routes share one mutex, read-only routes
// run concurrently.

#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>

#include "fairgate/session.hpp"

namespace fairgate {

struct ServiceState {
  SessionConfig config;
  PipelineArtifacts artifacts;
  std::unique_ptr<AuditChain> chain;
  std::mutex chain_mutex;
};

inline std::unique_ptr<ServiceState> build_service_state(
    const SessionConfig& config) {
  auto state = std::make_unique<ServiceState>();
  state->config = config;
  state->chain = std::make_unique<FileAuditChain>(config.chain_path);
  state->artifacts = run_pipeline(config, *state->chain);
  return state;
}

namespace detail {

inline void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(canonical_dump(body), "application/json");
}

template <typename Fn>
void handle(httplib::Response& res, Fn&& fn) {
  try {
    reply_json(res, 200, fn());
  } catch (const Error& e) {
    int status = e.code() == Errc::MalformedDocument ||
                         e.code() == Errc::InvalidValue ||
                         e.code() == Errc::InvariantViolation
                     ? 400
                     : 500;
    reply_json(res, status,
               json{{"error", e.what()}, {"code", errc_name(e.code())}});
  } catch (const json::exception& e) {
    reply_json(res, 400, json{{"error", e.what()}, {"code", "malformed_document"}});
  }
}

inline json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) {
    throw Error(Errc::MalformedDocument, "request body is not valid JSON");
  }
  return j;
}

}  // namespace detail

inline void register_routes(httplib::Server& server, ServiceState& state) {
  server.Post("/extract", [&](const httplib::Request& req, httplib::Response& res) {
    detail::handle(res, [&] {
      json body = detail::parse_body(req);
      std::string document = body.value("document", "");
      auto result = extract_policies(document, state.artifacts.lexicon,
                                     state.artifacts.graph, "request");
      return extraction_result_to_json(result);
    });
  });

  server.Post("/map", [&](const httplib::Request& req, httplib::Response& res) {
    detail::handle(res, [&] {
      json body = detail::parse_body(req);
      PolicySet set = body.contains("policies")
                          ? policy_set_from_json(body["policies"])
                          : state.artifacts.extraction.policies;
      SchemaDescriptor schema = body.contains("schema")
                                    ? schema_from_json(body["schema"])
                                    : state.artifacts.schema;
      return mapping_report_to_json(
          map_policy_entities(set, schema, state.artifacts.graph));
    });
  });

  server.Post("/plan", [&](const httplib::Request& req, httplib::Response& res) {
    detail::handle(res, [&] {
      json body = detail::parse_body(req);
      if (body.empty()) return plan_to_json(state.artifacts.plan);
      PolicySet set = body.contains("policies")
                          ? policy_set_from_json(body["policies"])
                          : state.artifacts.extraction.policies;
      SchemaDescriptor schema = body.contains("schema")
                                    ? schema_from_json(body["schema"])
                                    : state.artifacts.schema;
      SystemDescriptor system = body.contains("system")
                                    ? system_from_json(body["system"])
                                    : state.artifacts.system;
      auto mapping = map_policy_entities(
          set, detail::mapping_schema(schema, system), state.artifacts.graph);
      return plan_to_json(build_enforcement_plan(set, mapping, schema, system));
    });
  });

  server.Post("/decide", [&](const httplib::Request& req, httplib::Response& res) {
    detail::handle(res, [&] {
      AccessRequest request = access_request_from_json(detail::parse_body(req));
      std::lock_guard<std::mutex> lock(state.chain_mutex);
      AccessDecision decision = intercept_access(
          state.artifacts.plan, request, *state.chain,
          detail::session_now(state.config));
      return access_decision_to_json(decision);
    });
  });

  server.Post("/audit", [&](const httplib::Request& req, httplib::Response& res) {
    detail::handle(res, [&] {
      json body = detail::parse_body(req);
      std::int64_t seed = body.value("seed", state.config.seed);
      std::lock_guard<std::mutex> lock(state.chain_mutex);
      FairnessReport report = audit_fairness(
          state.artifacts.plan, state.artifacts.table, state.artifacts.probe,
          seed, *state.chain, detail::session_now(state.config),
          state.config.actor);
      return report_to_json(report);
    });
  });

  server.Get("/log/verify", [&](const httplib::Request&, httplib::Response& res) {
    detail::handle(res, [&] {
      VerifyResult result = verify_chain(*state.chain);
      json j{{"valid", result.valid}};
      if (result.first_invalid) j["first_invalid"] = *result.first_invalid;
      if (result.reason) j["reason"] = *result.reason;
      return j;
    });
  });
}

}  // namespace fairgate

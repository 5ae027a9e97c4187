// fairgate command-line front end.
//
// Exit codes: 0 success, 2 policy violation detected (a Deny decision or a
// Fail verdict), 1 operational error, 64 usage error.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairgate/fairgate.hpp"

namespace fg = fairgate;

namespace {

struct CommonOpts {
  std::string policies;
  std::string schema;
  std::string system;
  std::string graph;
  std::string lexicon;
  std::string table;
  std::string probe;
  std::string chain;
  std::int64_t seed = 0;
  std::string format = "text";
  std::string actor = "cli";
  std::string label;
  std::string now;
};

std::string resolve_chain_path(const std::string& flag_value) {
  if (const char* env = std::getenv("FAIRGATE_CHAIN"); env && *env) return env;
  return flag_value;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

fg::ConceptGraph load_graph(const CommonOpts& opts) {
  if (opts.graph.empty()) throw fg::Error(fg::Errc::InvalidValue, "--graph is required");
  return fg::load_concept_graph(fg::read_file(opts.graph));
}

// --policies accepts a structured policy file (.json/.xml) or a plain-text
// policy document, which is then extracted with the lexicon and graph.
fg::PolicySet load_policy_input(const CommonOpts& opts, const fg::ConceptGraph& graph) {
  if (opts.policies.empty()) {
    throw fg::Error(fg::Errc::InvalidValue, "--policies is required");
  }
  std::string text = fg::read_file(opts.policies);
  if (ends_with(opts.policies, ".xml")) {
    return fg::parse_policy_set(text, fg::Format::Xml);
  }
  if (ends_with(opts.policies, ".json")) {
    return fg::parse_policy_set(text, fg::Format::Json);
  }
  if (opts.lexicon.empty()) {
    throw fg::Error(fg::Errc::InvalidValue,
                    "a plain-text policy document requires --lexicon");
  }
  auto lexicon = fg::load_lexicon(fg::read_file(opts.lexicon));
  return fg::extract_policies(text, lexicon, graph, opts.policies).policies;
}

fg::SchemaDescriptor load_schema(const CommonOpts& opts) {
  if (opts.schema.empty()) throw fg::Error(fg::Errc::InvalidValue, "--schema is required");
  return fg::schema_from_json(fg::json::parse(fg::read_file(opts.schema)));
}

fg::SystemDescriptor load_system(const CommonOpts& opts) {
  if (opts.system.empty()) throw fg::Error(fg::Errc::InvalidValue, "--system is required");
  return fg::system_from_json(fg::json::parse(fg::read_file(opts.system)));
}

std::string now_or(const CommonOpts& opts) {
  return opts.now.empty() ? fg::now_rfc3339() : opts.now;
}

void emit(const CommonOpts& opts, const fg::json& body,
          const std::function<void()>& text_form) {
  if (opts.format == "json") {
    std::cout << fg::canonical_dump(body) << "\n";
  } else {
    text_form();
  }
}

fg::SessionConfig to_session_config(const CommonOpts& opts) {
  fg::SessionConfig config;
  config.policy_doc_path = opts.policies;
  config.schema_path = opts.schema;
  config.system_path = opts.system;
  config.graph_path = opts.graph;
  config.lexicon_path = opts.lexicon;
  config.table_path = opts.table;
  config.probe_spec = opts.probe;
  config.chain_path = resolve_chain_path(opts.chain);
  config.seed = opts.seed;
  config.actor = opts.actor;
  if (!opts.now.empty()) config.now = opts.now;
  if (!opts.label.empty()) config.label_column = opts.label;
  return config;
}

int cmd_extract(const CommonOpts& opts, const std::string& out_path) {
  auto graph = load_graph(opts);
  if (opts.lexicon.empty()) {
    throw fg::Error(fg::Errc::InvalidValue, "--lexicon is required");
  }
  auto lexicon = fg::load_lexicon(fg::read_file(opts.lexicon));
  auto result = fg::extract_policies(fg::read_file(opts.policies), lexicon,
                                     graph, opts.policies);
  if (!out_path.empty()) {
    auto format = ends_with(out_path, ".xml") ? fg::Format::Xml : fg::Format::Json;
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    out << fg::serialize_policy_set(result.policies, format);
    if (!out.good()) throw fg::Error(fg::Errc::IoError, "cannot write", out_path);
  }
  emit(opts, fg::extraction_result_to_json(result), [&] {
    std::int64_t access = 0, fairness = 0;
    for (const auto& p : result.policies.policies) {
      (p.kind == fg::PolicyKind::AccessControl ? access : fairness) += 1;
    }
    std::cout << "policies: " << result.policies.policies.size()
              << " (access_control: " << access << ", fairness: " << fairness
              << ")\n";
    std::cout << "sentences: " << result.stats.sentences_matched << "/"
              << result.stats.sentences_total << " matched\n";
    for (const auto& p : result.policies.policies) {
      std::cout << "  " << p.id << " [" << fg::to_string(p.kind) << "]";
      for (const auto& a : p.attributes) std::cout << " " << a;
      std::cout << "\n";
    }
    if (!result.unresolved.empty()) {
      std::cout << "unresolved mentions (manual review):\n";
      for (const auto& u : result.unresolved) {
        std::cout << "  sentence " << u.sentence_index << ": \"" << u.mention_text
                  << "\" (" << u.reason << ")\n";
      }
    }
  });
  return 0;
}

int cmd_map(const CommonOpts& opts) {
  auto graph = load_graph(opts);
  auto set = load_policy_input(opts, graph);
  auto schema = load_schema(opts);
  auto report = fg::map_policy_entities(set, schema, graph);
  emit(opts, fg::mapping_report_to_json(report), [&] {
    for (const auto& e : report.entries) {
      std::cout << e.policy_id << ": " << e.attribute_concept << " -> "
                << e.schema_field << " (" << fg::to_string(e.kind) << ", "
                << e.confidence << ")\n";
    }
    for (const auto& u : report.unmapped) {
      std::cout << u.policy_id << ": " << u.attribute_concept << " unmapped\n";
    }
  });
  return 0;
}

fg::EnforcementPlan build_plan(const CommonOpts& opts, const fg::ConceptGraph& graph,
                               fg::PolicySet& set_out) {
  set_out = load_policy_input(opts, graph);
  auto schema = load_schema(opts);
  auto system = load_system(opts);
  auto mapping = fg::map_policy_entities(
      set_out, fg::detail::mapping_schema(schema, system), graph);
  return fg::build_enforcement_plan(set_out, mapping, schema, system);
}

int cmd_plan(const CommonOpts& opts) {
  auto graph = load_graph(opts);
  fg::PolicySet set;
  auto plan = build_plan(opts, graph, set);
  emit(opts, fg::plan_to_json(plan), [&] {
    std::cout << "case: " << fg::to_string(plan.case_id) << "\n";
    std::cout << "fields in use:";
    for (const auto& f : plan.fields_in_use) std::cout << " " << f;
    std::cout << "\ndenied fields:";
    for (const auto& f : plan.denied_fields) std::cout << " " << f;
    std::cout << "\nfairness checks: " << plan.required_fairness_checks.size()
              << "\n";
    for (const auto& w : plan.warnings) std::cout << "warning: " << w << "\n";
  });
  return 0;
}

int cmd_check_access(const CommonOpts& opts, const std::string& field,
                     const std::string& purpose) {
  auto graph = load_graph(opts);
  fg::PolicySet set;
  auto plan = build_plan(opts, graph, set);
  std::string chain_path = resolve_chain_path(opts.chain);
  if (chain_path.empty()) {
    throw fg::Error(fg::Errc::InvalidValue, "--chain is required");
  }
  fg::FileAuditChain chain(chain_path);
  fg::AccessRequest request{opts.actor, plan.dataset_id, field, purpose};
  auto decision = fg::intercept_access(plan, request, chain, now_or(opts));
  emit(opts, fg::access_decision_to_json(decision), [&] {
    std::cout << fg::to_string(decision.decision);
    if (decision.alert) std::cout << ": " << decision.alert->message;
    std::cout << "\n";
  });
  return decision.decision == fg::Decision::Deny ? 2 : 0;
}

int cmd_audit(const CommonOpts& opts) {
  auto config = to_session_config(opts);
  if (config.chain_path.empty()) {
    throw fg::Error(fg::Errc::InvalidValue, "--chain is required");
  }
  if (opts.table.empty() || opts.probe.empty()) {
    throw fg::Error(fg::Errc::InvalidValue, "--table and --probe are required");
  }
  fg::FileAuditChain chain(config.chain_path);
  auto artifacts = fg::run_pipeline(config, chain);
  auto report = fg::audit_fairness(artifacts.plan, artifacts.table,
                                   artifacts.probe, config.seed, chain,
                                   fg::detail::session_now(config), opts.actor);
  bool any_fail = false;
  for (const auto& r : report.results) {
    for (const auto& [metric, verdict] : r.verdicts) {
      if (verdict == fg::Verdict::Fail) any_fail = true;
    }
  }
  emit(opts, fg::report_to_json(report), [&] {
    for (const auto& r : report.results) {
      std::cout << r.policy_id << " " << r.attribute << " via " << r.mapped_field
                << ": deviation=" << r.deviation;
      if (r.disparate_impact) {
        std::cout << " di=" << *r.disparate_impact;
      } else {
        std::cout << " di=undefined";
      }
      std::cout << " verdicts:";
      for (const auto& [metric, verdict] : r.verdicts) {
        std::cout << " " << fg::to_string(metric) << "=" << fg::to_string(verdict);
      }
      std::cout << "\n";
    }
    std::cout << "report digest: " << report.report_digest << "\n";
  });
  return any_fail ? 2 : 0;
}

int cmd_log_verify(const CommonOpts& opts) {
  std::string chain_path = resolve_chain_path(opts.chain);
  auto result = fg::verify_chain_file(chain_path);
  fg::json body{{"valid", result.valid}};
  if (result.first_invalid) body["first_invalid"] = *result.first_invalid;
  if (result.reason) body["reason"] = *result.reason;
  emit(opts, body, [&] {
    if (result.valid) {
      std::cout << "valid\n";
    } else {
      std::cout << "invalid at " << *result.first_invalid << ": " << *result.reason
                << "\n";
    }
  });
  return result.valid ? 0 : 1;
}

int cmd_log_query(const CommonOpts& opts, const std::string& dataset,
                  const std::string& kind, const std::string& from,
                  const std::string& to, bool actor_set) {
  std::string chain_path = resolve_chain_path(opts.chain);
  fg::FileAuditChain chain(chain_path);
  fg::LogFilter filter;
  if (actor_set) filter.actor = opts.actor;
  if (!dataset.empty()) filter.dataset_id = dataset;
  if (!kind.empty()) {
    auto k = fg::event_kind_from(kind);
    if (!k) throw fg::Error(fg::Errc::InvalidValue, "unknown event kind", kind);
    filter.event_kind = k;
  }
  if (!from.empty() || !to.empty()) {
    if (from.empty() || to.empty()) {
      throw fg::Error(fg::Errc::InvalidValue, "--from and --to must be given together");
    }
    filter.time_range = std::make_pair(from, to);
  }
  auto entries = fg::query_log(chain, filter);
  fg::json body = fg::json::array();
  for (const auto& e : entries) body.push_back(fg::entry_to_json(e));
  emit(opts, body, [&] {
    for (const auto& e : entries) {
      std::cout << e.index << " " << e.event.timestamp << " "
                << fg::to_string(e.event.event_kind) << " actor=" << e.event.actor
                << " dataset=" << e.event.dataset_id << "\n";
    }
  });
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  auto config = to_session_config(opts);
  if (config.chain_path.empty()) {
    throw fg::Error(fg::Errc::InvalidValue, "--chain is required");
  }
  fg::FileAuditChain chain(config.chain_path);
  auto summary = fg::run_session(config, chain);
  emit(opts, fg::summary_to_json(summary), [&] {
    std::cout << "policies: " << summary.policies << "\n";
    std::cout << "case: " << fg::to_string(summary.case_id) << "\n";
    std::cout << "denials: " << summary.denials << "\n";
    std::cout << "verdicts: pass=" << summary.pass << " fail=" << summary.fail
              << " indeterminate=" << summary.indeterminate << "\n";
    std::cout << "fairness verdict: " << fg::overall_verdict(summary) << "\n";
    if (summary.report_digest) {
      std::cout << "report digest: " << *summary.report_digest << "\n";
    }
    std::cout << "chain head: " << summary.chain_head << "\n";
    for (const auto& w : summary.warnings) std::cout << "warning: " << w << "\n";
  });
  return (summary.denials > 0 || summary.fail > 0) ? 2 : 0;
}

int cmd_serve(const CommonOpts& opts, const std::string& host, int port) {
  auto config = to_session_config(opts);
  if (config.chain_path.empty()) {
    throw fg::Error(fg::Errc::InvalidValue, "--chain is required");
  }
  auto state = fg::build_service_state(config);
  httplib::Server server;
  fg::register_routes(server, *state);
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    throw fg::Error(fg::Errc::IoError, "cannot bind", host + ":" + std::to_string(port));
  }
  return 0;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--policies", opts.policies,
                  "policy document (text) or policy file (.json/.xml)");
  cmd->add_option("--schema", opts.schema, "dataset schema JSON");
  cmd->add_option("--system", opts.system, "system descriptor JSON");
  cmd->add_option("--graph", opts.graph, "concept graph JSON");
  cmd->add_option("--lexicon", opts.lexicon, "trigger lexicon JSON");
  cmd->add_option("--table", opts.table, "data table CSV (header row)");
  cmd->add_option("--probe", opts.probe, "model probe: cmd:<argv> or http:<url>");
  cmd->add_option("--chain", opts.chain, "audit chain file (FAIRGATE_CHAIN overrides)");
  cmd->add_option("--seed", opts.seed, "perturbation seed");
  cmd->add_option("--format", opts.format, "output format: json|text")
      ->check(CLI::IsMember({"json", "text"}));
  cmd->add_option("--actor", opts.actor, "actor recorded in audit events");
  cmd->add_option("--label", opts.label, "label column name (default: label)");
  cmd->add_option("--now", opts.now,
                  "pin event timestamps to this RFC 3339 instant (replay)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policy compliance engine: extraction, enforcement, fairness audit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out_path, field, purpose = "unspecified";
  std::string dataset_filter, kind_filter, from_ts, to_ts;
  std::string host = "127.0.0.1";
  int port = 8787;

  auto* extract = app.add_subcommand("extract", "policy document -> structured policies");
  add_common(extract, opts);
  extract->add_option("--out", out_path, "write the policy set here (.json or .xml)");

  auto* map = app.add_subcommand("map", "map policy attributes to schema fields");
  add_common(map, opts);

  auto* plan = app.add_subcommand("plan", "compile the enforcement plan");
  add_common(plan, opts);

  auto* check = app.add_subcommand("check-access", "decide one access request");
  add_common(check, opts);
  check->add_option("--field", field, "requested field")->required();
  check->add_option("--purpose", purpose, "request purpose");

  auto* audit = app.add_subcommand("audit", "probe the model and score fairness");
  add_common(audit, opts);

  auto* log = app.add_subcommand("log", "audit chain inspection");
  log->require_subcommand(1);
  auto* verify = log->add_subcommand("verify", "verify the hash chain");
  add_common(verify, opts);
  auto* query = log->add_subcommand("query", "filter chain entries");
  add_common(query, opts);
  query->add_option("--dataset", dataset_filter, "filter by dataset id");
  query->add_option("--kind", kind_filter, "filter by event kind");
  query->add_option("--from", from_ts, "time range start (RFC 3339)");
  query->add_option("--to", to_ts, "time range end (RFC 3339)");

  auto* run = app.add_subcommand("run", "full session: extract, map, plan, enforce, audit");
  add_common(run, opts);

  auto* serve = app.add_subcommand("serve", "HTTP service mode");
  add_common(serve, opts);
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "bind port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 64;
  }

  try {
    if (*extract) return cmd_extract(opts, out_path);
    if (*map) return cmd_map(opts);
    if (*plan) return cmd_plan(opts);
    if (*check) return cmd_check_access(opts, field, purpose);
    if (*audit) return cmd_audit(opts);
    if (*verify) return cmd_log_verify(opts);
    if (*query) {
      return cmd_log_query(opts, dataset_filter, kind_filter, from_ts, to_ts,
                           query->count("--actor") > 0);
    }
    if (*run) return cmd_run(opts);
    if (*serve) return cmd_serve(opts, host, port);
  } catch (const fg::Error& e) {
    std::cerr << "error (" << fg::errc_name(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 64;
}

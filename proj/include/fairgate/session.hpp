#pragma once

// End-to-end orchestration: extract -> map -> plan -> enforce -> audit, with
// every stage logged. A failing stage appends a SessionFailed event before
// the error propagates, so the chain explains every aborted run.

#include <cstdint>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fairgate/audit_chain.hpp"
#include "fairgate/auditor.hpp"
#include "fairgate/data_table.hpp"
#include "fairgate/enforcement.hpp"
#include "fairgate/errors.hpp"
#include "fairgate/extractor.hpp"
#include "fairgate/policy_io.hpp"
#include "fairgate/probe.hpp"

namespace fairgate {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw Error(Errc::IoError, "cannot open file", path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

struct SessionConfig {
  std::string policy_doc_path;
  std::string schema_path;
  std::string system_path;
  std::string graph_path;
  std::string lexicon_path;
  std::string table_path;
  std::string probe_spec;
  std::string chain_path;
  std::int64_t seed = 0;
  std::string actor = "cli";
  std::optional<std::string> now;           // pin event timestamps for replay
  std::optional<std::string> label_column;  // defaults to a column named "label"
};

struct SessionSummary {
  std::int64_t policies = 0;
  std::int64_t denials = 0;
  std::int64_t pass = 0;
  std::int64_t fail = 0;
  std::int64_t indeterminate = 0;
  CaseId case_id = CaseId::Case2;
  std::string chain_head;
  std::optional<std::string> report_digest;
  std::vector<std::string> warnings;
  bool operator==(const SessionSummary&) const = default;
};

inline const char* overall_verdict(const SessionSummary& s) {
  if (s.fail > 0) return "fail";
  if (s.indeterminate > 0) return "indeterminate";
  if (s.pass > 0) return "pass";
  return "none";
}

inline json summary_to_json(const SessionSummary& s) {
  json j{{"policies", s.policies},
         {"denials", s.denials},
         {"verdicts",
          {{"pass", s.pass},
           {"fail", s.fail},
           {"indeterminate", s.indeterminate}}},
         {"fairness_verdict", overall_verdict(s)},
         {"case_id", to_string(s.case_id)},
         {"chain_head", s.chain_head},
         {"warnings", s.warnings}};
  if (s.report_digest) j["report_digest"] = *s.report_digest;
  return j;
}

struct PipelineArtifacts {
  ConceptGraph graph;
  TriggerLexicon lexicon;
  ExtractionResult extraction;
  SchemaDescriptor schema;
  SystemDescriptor system;
  MappingReport mapping;
  EnforcementPlan plan;
  DataTable table;
  ModelProbe probe;
};

namespace detail {

inline std::string session_now(const SessionConfig& config) {
  return config.now ? *config.now : now_rfc3339();
}

inline void log_session_failure(AuditChain& chain, const SessionConfig& config,
                                const std::string& dataset_id,
                                const std::string& stage, const Error& e) {
  try {
    AuditEvent event;
    event.event_kind = EventKind::SessionFailed;
    event.timestamp = session_now(config);
    event.actor = config.actor;
    event.dataset_id = dataset_id;
    event.payload = {{"stage", stage},
                     {"code", errc_name(e.code())},
                     {"error", e.what()}};
    chain.append_event(event);
  } catch (const Error&) {
    // the chain itself is down; nothing left to record to
  }
}

// Schema restricted to the plan's field universe, so mapping and plan agree
// on the set of fields under discussion in every transparency case.
inline SchemaDescriptor mapping_schema(const SchemaDescriptor& schema,
                                       const SystemDescriptor& system) {
  std::vector<std::string> universe = plan_field_universe(schema, system);
  SchemaDescriptor out;
  out.dataset_id = schema.dataset_id;
  out.structured = schema.structured;
  for (const auto& name : universe) {
    SchemaField field;
    field.name = name;
    for (const auto& f : schema.fields) {
      if (normalize_term(f.name) == normalize_term(name)) {
        field = f;
        break;
      }
    }
    out.fields.push_back(std::move(field));
  }
  return out;
}

}  // namespace detail

// Loads every input, extracts policies, maps them and compiles the plan,
// appending PolicyRegistered and PlanCreated. Table and probe are loaded
// up front so a bad config fails before the chain records anything.
inline PipelineArtifacts run_pipeline(const SessionConfig& config,
                                      AuditChain& chain) {
  std::string stage = "load";
  std::string dataset_id;
  try {
    PipelineArtifacts a;
    std::string document = read_file(config.policy_doc_path);
    a.graph = load_concept_graph(read_file(config.graph_path));
    a.lexicon = load_lexicon(read_file(config.lexicon_path));
    a.schema = schema_from_json(json::parse(read_file(config.schema_path)));
    a.system = system_from_json(json::parse(read_file(config.system_path)));
    dataset_id = a.schema.dataset_id;
    if (!config.table_path.empty()) {
      a.table = load_csv(read_file(config.table_path), &a.schema);
      std::string label = config.label_column.value_or("label");
      if (a.table.column_index(label)) a.table.label_column = label;
    }
    if (!config.probe_spec.empty()) a.probe = parse_probe_spec(config.probe_spec);

    stage = "extract";
    a.extraction = extract_policies(document, a.lexicon, a.graph,
                                    config.policy_doc_path);
    {
      auto violations = validate_policy_set(a.extraction.policies);
      if (!violations.empty()) {
        throw Error(Errc::InvariantViolation, violations.front().detail,
                    violations.front().policy_id);
      }
      AuditEvent event;
      event.event_kind = EventKind::PolicyRegistered;
      event.timestamp = detail::session_now(config);
      event.actor = config.actor;
      event.dataset_id = dataset_id;
      event.payload = {
          {"policy_set_digest",
           sha256_hex(canonical_dump(policy_set_to_json(a.extraction.policies)))},
          {"policies", a.extraction.policies.policies.size()},
          {"unresolved", a.extraction.unresolved.size()}};
      chain.append_event(event);
    }

    stage = "map";
    a.mapping = map_policy_entities(a.extraction.policies,
                                    detail::mapping_schema(a.schema, a.system),
                                    a.graph);

    stage = "plan";
    a.plan = build_enforcement_plan(a.extraction.policies, a.mapping, a.schema,
                                    a.system);
    {
      AuditEvent event;
      event.event_kind = EventKind::PlanCreated;
      event.timestamp = detail::session_now(config);
      event.actor = config.actor;
      event.dataset_id = dataset_id;
      event.payload = {
          {"plan_digest", sha256_hex(canonical_dump(plan_to_json(a.plan)))},
          {"case_id", to_string(a.plan.case_id)},
          {"denied_fields", a.plan.denied_fields.size()}};
      chain.append_event(event);
    }
    return a;
  } catch (const Error& e) {
    detail::log_session_failure(chain, config, dataset_id, stage, e);
    throw;
  } catch (const json::exception& e) {
    Error err(Errc::MalformedDocument, e.what());
    detail::log_session_failure(chain, config, dataset_id, stage, err);
    throw err;
  }
}

inline SessionSummary run_session(const SessionConfig& config,
                                  AuditChain& chain) {
  PipelineArtifacts a = run_pipeline(config, chain);
  SessionSummary summary;
  summary.policies =
      static_cast<std::int64_t>(a.extraction.policies.policies.size());
  summary.case_id = a.plan.case_id;
  summary.warnings = a.plan.warnings;

  std::string stage = "enforce";
  try {
    for (const auto& field : a.plan.fields_in_use) {
      AccessRequest request{config.actor, a.schema.dataset_id, field,
                            "session sweep"};
      AccessDecision decision = intercept_access(a.plan, request, chain,
                                                 detail::session_now(config));
      if (decision.decision == Decision::Deny) summary.denials += 1;
      if (!decision.audit_event_id) {
        throw Error(Errc::AuditUnavailable, "access decision could not be logged");
      }
    }

    stage = "audit";
    if (!a.plan.required_fairness_checks.empty()) {
      if (a.table.rows.empty()) {
        throw Error(Errc::InvalidValue,
                    "fairness checks require a table; none was supplied");
      }
      if (config.probe_spec.empty()) {
        throw Error(Errc::InvalidValue,
                    "fairness checks require a probe; none was supplied");
      }
      FairnessReport report =
          audit_fairness(a.plan, a.table, a.probe, config.seed, chain,
                         detail::session_now(config), config.actor);
      summary.report_digest = report.report_digest;
      for (const auto& result : report.results) {
        for (const auto& [metric, verdict] : result.verdicts) {
          switch (verdict) {
            case Verdict::Pass: summary.pass += 1; break;
            case Verdict::Fail: summary.fail += 1; break;
            case Verdict::Indeterminate: summary.indeterminate += 1; break;
          }
        }
      }
    }
  } catch (const Error& e) {
    detail::log_session_failure(chain, config, a.schema.dataset_id, stage, e);
    throw;
  }
  summary.chain_head = chain.head_hash();
  return summary;
}

}  // namespace fairgate

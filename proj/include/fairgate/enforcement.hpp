#pragma once

// Transparency-case classification, plan compilation and access
// interception. Conflict combining is deny-overrides; unknown fields are
// denied by default; a failed audit append forces Deny (fail-closed).

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fairgate/audit_chain.hpp"
#include "fairgate/concept_graph.hpp"
#include "fairgate/errors.hpp"
#include "fairgate/policy.hpp"

namespace fairgate {

struct SystemDescriptor {
  std::string system_id;
  std::optional<std::vector<std::string>> input_spec;
  std::optional<std::vector<std::string>> declared_fields;
  std::optional<std::string> documentation_ref;
  bool operator==(const SystemDescriptor&) const = default;
};

inline SystemDescriptor system_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::MalformedDocument, "system descriptor must be a JSON object");
  SystemDescriptor s;
  if (auto it = j.find("system_id"); it != j.end() && it->is_string()) {
    s.system_id = it->get<std::string>();
  }
  auto read_list = [&](const char* key) -> std::optional<std::vector<std::string>> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_array()) {
      throw Error(Errc::MalformedDocument, std::string(key) + " must be an array");
    }
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& v : *it) {
      if (!v.is_string()) {
        throw Error(Errc::MalformedDocument, std::string(key) + " entries must be strings");
      }
      std::string name = v.get<std::string>();
      if (seen.insert(normalize_term(name)).second) out.push_back(std::move(name));
    }
    return out;
  };
  s.input_spec = read_list("input_spec");
  if (s.input_spec && s.input_spec->empty()) {
    throw Error(Errc::InvariantViolation, "input_spec present but empty");
  }
  s.declared_fields = read_list("declared_fields");
  if (auto it = j.find("documentation_ref"); it != j.end() && it->is_string()) {
    s.documentation_ref = it->get<std::string>();
  }
  return s;
}

inline json system_to_json(const SystemDescriptor& s) {
  json j{{"system_id", s.system_id}};
  if (s.input_spec) j["input_spec"] = *s.input_spec;
  if (s.declared_fields) j["declared_fields"] = *s.declared_fields;
  if (s.documentation_ref) j["documentation_ref"] = *s.documentation_ref;
  return j;
}

enum class CaseId { Case1, Case2, Case3, Case4 };

inline const char* to_string(CaseId c) {
  switch (c) {
    case CaseId::Case1: return "case1";
    case CaseId::Case2: return "case2";
    case CaseId::Case3: return "case3";
    case CaseId::Case4: return "case4";
  }
  return "unknown";
}

inline std::optional<CaseId> case_from(std::string_view s) {
  if (s == "case1") return CaseId::Case1;
  if (s == "case2") return CaseId::Case2;
  if (s == "case3") return CaseId::Case3;
  if (s == "case4") return CaseId::Case4;
  return std::nullopt;
}

inline CaseId classify_case(const SchemaDescriptor& schema,
                            const SystemDescriptor& system) {
  if (schema.structured) {
    return system.input_spec ? CaseId::Case1 : CaseId::Case2;
  }
  return system.input_spec ? CaseId::Case3 : CaseId::Case4;
}

struct FairnessCheck {
  std::string policy_id;
  std::string attribute;
  std::vector<std::string> mapped_fields;  // normalized, sorted
  std::set<Metric> metrics;
  std::map<Metric, double> thresholds;
  std::optional<std::string> privileged_value;
  bool operator==(const FairnessCheck&) const = default;
};

struct EnforcementPlan {
  CaseId case_id = CaseId::Case2;
  std::string dataset_id;
  std::string system_id;
  std::set<std::string> fields_in_use;   // normalized field names
  std::set<std::string> denied_fields;   // subset semantics: deny wins
  std::map<std::string, std::string> denied_by;  // field -> policy id
  std::vector<FairnessCheck> required_fairness_checks;
  std::vector<std::string> warnings;
  bool operator==(const EnforcementPlan&) const = default;
};

// Field universe the plan speaks over, per transparency case.
inline std::vector<std::string> plan_field_universe(
    const SchemaDescriptor& schema, const SystemDescriptor& system) {
  switch (classify_case(schema, system)) {
    case CaseId::Case1:
    case CaseId::Case3:
      return *system.input_spec;
    case CaseId::Case2: {
      std::vector<std::string> out;
      for (const auto& f : schema.fields) out.push_back(f.name);
      return out;
    }
    case CaseId::Case4:
      if (!system.declared_fields) {
        throw Error(Errc::ManualSpecificationRequired,
                    "unstructured data with an opaque system: supply declared_fields",
                    system.system_id);
      }
      return *system.declared_fields;
  }
  return {};
}

inline EnforcementPlan build_enforcement_plan(const PolicySet& set,
                                              const MappingReport& mapping,
                                              const SchemaDescriptor& schema,
                                              const SystemDescriptor& system) {
  EnforcementPlan plan;
  plan.case_id = classify_case(schema, system);
  plan.dataset_id = schema.dataset_id;
  plan.system_id = system.system_id;
  for (const auto& name : plan_field_universe(schema, system)) {
    plan.fields_in_use.insert(normalize_term(name));
  }
  for (const auto& entry : mapping.entries) {
    if (!plan.fields_in_use.count(normalize_term(entry.schema_field))) {
      throw Error(Errc::StaleMapping,
                  "mapping references a field outside the fields-in-use universe",
                  entry.schema_field);
    }
  }
  auto mapped_fields_for = [&](const std::string& policy_id,
                               const std::string& attribute) {
    std::vector<std::string> out;
    for (const auto& entry : mapping.entries) {
      if (entry.policy_id != policy_id || entry.attribute_concept != attribute) {
        continue;
      }
      std::string normalized = normalize_term(entry.schema_field);
      if (std::find(out.begin(), out.end(), normalized) == out.end()) {
        out.push_back(normalized);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  for (const auto& policy : set.policies) {
    for (const auto& attribute : policy.attributes) {
      auto fields = mapped_fields_for(policy.id, attribute);
      if (fields.empty()) {
        plan.warnings.push_back("policy " + policy.id + ": attribute \"" +
                                attribute + "\" matches no field in use");
      }
      if (policy.kind == PolicyKind::AccessControl) {
        for (const auto& f : fields) {
          plan.denied_fields.insert(f);
          plan.denied_by.emplace(f, policy.id);  // first policy wins the citation
        }
      } else {
        FairnessCheck check;
        check.policy_id = policy.id;
        check.attribute = attribute;
        check.mapped_fields = fields;
        const FairnessConstraint& constraint = *policy.fairness_constraint;
        check.metrics = constraint.metrics;
        for (Metric m : check.metrics) {
          check.thresholds[m] = constraint.threshold_for(m);
        }
        if (auto it = constraint.privileged_values.find(attribute);
            it != constraint.privileged_values.end()) {
          check.privileged_value = it->second;
        }
        plan.required_fairness_checks.push_back(std::move(check));
      }
    }
  }
  return plan;
}

inline json plan_to_json(const EnforcementPlan& plan) {
  json checks = json::array();
  for (const auto& c : plan.required_fairness_checks) {
    json metrics = json::array();
    for (Metric m : c.metrics) metrics.push_back(to_string(m));
    json thresholds = json::object();
    for (const auto& [m, t] : c.thresholds) thresholds[to_string(m)] = t;
    json check{{"policy_id", c.policy_id},
               {"attribute", c.attribute},
               {"mapped_fields", c.mapped_fields},
               {"metrics", metrics},
               {"thresholds", thresholds}};
    if (c.privileged_value) check["privileged_value"] = *c.privileged_value;
    checks.push_back(std::move(check));
  }
  return json{{"case_id", to_string(plan.case_id)},
              {"dataset_id", plan.dataset_id},
              {"system_id", plan.system_id},
              {"fields_in_use", plan.fields_in_use},
              {"denied_fields", plan.denied_fields},
              {"denied_by", plan.denied_by},
              {"required_fairness_checks", checks},
              {"default_unknown_field", "deny"},
              {"warnings", plan.warnings}};
}

inline EnforcementPlan plan_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::MalformedDocument, "plan must be a JSON object");
  EnforcementPlan plan;
  auto case_id = case_from(j.at("case_id").get<std::string>());
  if (!case_id) {
    throw Error(Errc::MalformedDocument, "plan: unknown case_id",
                j.at("case_id").get<std::string>());
  }
  plan.case_id = *case_id;
  plan.dataset_id = j.value("dataset_id", "");
  plan.system_id = j.value("system_id", "");
  for (const auto& f : j.at("fields_in_use")) {
    plan.fields_in_use.insert(f.get<std::string>());
  }
  for (const auto& f : j.at("denied_fields")) {
    plan.denied_fields.insert(f.get<std::string>());
  }
  if (auto it = j.find("denied_by"); it != j.end() && it->is_object()) {
    for (const auto& [field, policy] : it->items()) {
      plan.denied_by[field] = policy.get<std::string>();
    }
  }
  for (const auto& c : j.at("required_fairness_checks")) {
    FairnessCheck check;
    check.policy_id = c.at("policy_id").get<std::string>();
    check.attribute = c.at("attribute").get<std::string>();
    for (const auto& f : c.at("mapped_fields")) {
      check.mapped_fields.push_back(f.get<std::string>());
    }
    for (const auto& m : c.at("metrics")) {
      auto metric = metric_from(m.get<std::string>());
      if (!metric) {
        throw Error(Errc::MalformedDocument, "plan: unknown metric", m.get<std::string>());
      }
      check.metrics.insert(*metric);
    }
    if (auto it = c.find("thresholds"); it != c.end() && it->is_object()) {
      for (const auto& [name, value] : it->items()) {
        auto metric = metric_from(name);
        if (!metric) throw Error(Errc::MalformedDocument, "plan: unknown metric", name);
        check.thresholds[*metric] = value.get<double>();
      }
    }
    if (auto it = c.find("privileged_value"); it != c.end() && it->is_string()) {
      check.privileged_value = it->get<std::string>();
    }
    plan.required_fairness_checks.push_back(std::move(check));
  }
  if (auto it = j.find("warnings"); it != j.end() && it->is_array()) {
    for (const auto& w : *it) plan.warnings.push_back(w.get<std::string>());
  }
  return plan;
}

// --------------------------------------------------------------------------
// Access interception

struct AccessRequest {
  std::string actor;
  std::string dataset_id;
  std::string field;
  std::string purpose;
  bool operator==(const AccessRequest&) const = default;
};

inline AccessRequest access_request_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::MalformedDocument, "access request must be a JSON object");
  AccessRequest r;
  r.actor = j.value("actor", "");
  r.dataset_id = j.value("dataset_id", "");
  if (!j.contains("field") || !j["field"].is_string()) {
    throw Error(Errc::MalformedDocument, "access request: missing \"field\"");
  }
  r.field = j["field"].get<std::string>();
  r.purpose = j.value("purpose", "");
  return r;
}

enum class Decision { Permit, Deny };

inline const char* to_string(Decision d) {
  return d == Decision::Permit ? "permit" : "deny";
}

struct AccessAlert {
  std::string policy_id;  // empty when no single policy applies
  std::string field;
  std::string message;
  bool operator==(const AccessAlert&) const = default;
};

struct AccessDecision {
  Decision decision = Decision::Deny;
  std::optional<AccessAlert> alert;
  std::optional<std::string> audit_event_id;  // absent only on fail-closed path
  bool operator==(const AccessDecision&) const = default;
};

inline json access_decision_to_json(const AccessDecision& d) {
  json j{{"decision", to_string(d.decision)}};
  if (d.alert) {
    j["alert"] = {{"policy_id", d.alert->policy_id},
                  {"field", d.alert->field},
                  {"message", d.alert->message}};
  }
  if (d.audit_event_id) j["audit_event_id"] = *d.audit_event_id;
  return j;
}

// Logs the decision before returning it. When the append fails the decision
// degrades to Deny with no audit_event_id: access without a logged trace is
// never permitted.
inline AccessDecision intercept_access(const EnforcementPlan& plan,
                                       const AccessRequest& request,
                                       AuditChain& chain,
                                       const std::string& now = now_rfc3339()) {
  std::string field = normalize_term(request.field);
  AccessDecision decision;
  if (plan.denied_fields.count(field)) {
    decision.decision = Decision::Deny;
    auto it = plan.denied_by.find(field);
    decision.alert = AccessAlert{
        it != plan.denied_by.end() ? it->second : "", request.field,
        "access to \"" + request.field + "\" violates policy " +
            (it != plan.denied_by.end() ? it->second : "(unattributed)")};
  } else if (plan.fields_in_use.count(field)) {
    decision.decision = Decision::Permit;
  } else {
    decision.decision = Decision::Deny;
    decision.alert = AccessAlert{"", request.field, "unknown field"};
  }
  AuditEvent event;
  event.event_kind = EventKind::AccessDecision;
  event.timestamp = now;
  event.actor = request.actor;
  event.dataset_id =
      request.dataset_id.empty() ? plan.dataset_id : request.dataset_id;
  event.payload = {{"actor", request.actor},
                   {"dataset_id", event.dataset_id},
                   {"field", request.field},
                   {"purpose", request.purpose},
                   {"decision", to_string(decision.decision)}};
  if (decision.alert) {
    event.payload["alert"] = {{"policy_id", decision.alert->policy_id},
                              {"field", decision.alert->field},
                              {"message", decision.alert->message}};
  }
  try {
    AuditEntry entry = chain.append_event(event);
    decision.audit_event_id = entry.entry_hash;
  } catch (const Error& e) {
    if (e.code() != Errc::StorageFailure) throw;
    decision.decision = Decision::Deny;
    decision.alert = AccessAlert{"", request.field,
                                 "audit log unavailable; access denied"};
    decision.audit_event_id.reset();
  }
  return decision;
}

}  // namespace fairgate

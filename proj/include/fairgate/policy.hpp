#pragma once

// Structured machine-readable policy representation: an XACML-style
// target/effect skeleton extended with a fairness obligation block, plus
// scope (time window, jurisdiction) and extraction provenance.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fairgate/canonical.hpp"
#include "fairgate/errors.hpp"

namespace fairgate {

inline constexpr const char* kPolicySchemaVersion = "fairgate-policy/1";

enum class PolicyKind { AccessControl, Fairness };
enum class Effect { DenyUse, RequireFairness };
enum class Metric { OutputDeviation, DisparateImpact, DisparateMistreatment };

inline const char* to_string(PolicyKind k) {
  return k == PolicyKind::AccessControl ? "access_control" : "fairness";
}
inline const char* to_string(Effect e) {
  return e == Effect::DenyUse ? "deny_use" : "require_fairness";
}
inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::OutputDeviation: return "output_deviation";
    case Metric::DisparateImpact: return "disparate_impact";
    case Metric::DisparateMistreatment: return "disparate_mistreatment";
  }
  return "unknown";
}

inline std::optional<PolicyKind> policy_kind_from(std::string_view s) {
  if (s == "access_control") return PolicyKind::AccessControl;
  if (s == "fairness") return PolicyKind::Fairness;
  return std::nullopt;
}
inline std::optional<Effect> effect_from(std::string_view s) {
  if (s == "deny_use") return Effect::DenyUse;
  if (s == "require_fairness") return Effect::RequireFairness;
  return std::nullopt;
}
inline std::optional<Metric> metric_from(std::string_view s) {
  if (s == "output_deviation") return Metric::OutputDeviation;
  if (s == "disparate_impact") return Metric::DisparateImpact;
  if (s == "disparate_mistreatment") return Metric::DisparateMistreatment;
  return std::nullopt;
}

// Pass verdict directions: deviation <= bound, impact ratio >= bound,
// mistreatment gaps <= bound.
inline constexpr double kDefaultDeviationBound = 0.05;
inline constexpr double kDefaultImpactBound = 0.8;  // four-fifths convention
inline constexpr double kDefaultMistreatmentBound = 0.1;

inline double default_threshold(Metric m) {
  switch (m) {
    case Metric::OutputDeviation: return kDefaultDeviationBound;
    case Metric::DisparateImpact: return kDefaultImpactBound;
    case Metric::DisparateMistreatment: return kDefaultMistreatmentBound;
  }
  return 0.0;
}

struct FairnessConstraint {
  std::set<Metric> metrics;
  std::map<Metric, double> thresholds;
  // attribute -> value treated as privileged when grouping rows
  std::map<std::string, std::string> privileged_values;

  double threshold_for(Metric m) const {
    auto it = thresholds.find(m);
    return it != thresholds.end() ? it->second : default_threshold(m);
  }

  bool operator==(const FairnessConstraint&) const = default;
};

struct TimeWindow {
  std::string start;  // RFC3339 UTC
  std::string end;
  bool operator==(const TimeWindow&) const = default;
};

struct Scope {
  std::optional<TimeWindow> time_window;
  std::optional<std::string> jurisdiction;
  bool operator==(const Scope&) const = default;
};

struct Provenance {
  std::string source_document;
  std::int64_t sentence_index = 0;
  std::string sentence_text;
  double extraction_confidence = 1.0;
  bool operator==(const Provenance&) const = default;
};

struct Policy {
  std::string id;
  PolicyKind kind = PolicyKind::AccessControl;
  std::optional<std::string> target_dataset;
  std::vector<std::string> attributes;  // lowercase, deduplicated
  Effect effect = Effect::DenyUse;
  std::optional<FairnessConstraint> fairness_constraint;
  Scope scope;
  Provenance provenance;

  bool operator==(const Policy&) const = default;
};

struct PolicySet {
  std::string schema_version = kPolicySchemaVersion;
  std::string source_digest;  // SHA-256 hex of the source document bytes
  std::vector<Policy> policies;

  bool operator==(const PolicySet&) const = default;
};

// One violated invariant; violations are values, not errors.
struct Violation {
  std::string invariant;
  std::string policy_id;
  std::string detail;
  bool operator==(const Violation&) const = default;
};

inline std::string lowercase_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return s;
}

// Attribute names are lowercased and deduplicated (first occurrence wins) at
// construction so cross-module identity checks stay trivial.
inline std::vector<std::string> normalize_attributes(
    const std::vector<std::string>& attrs) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& a : attrs) {
    std::string low = lowercase_ascii(a);
    if (seen.insert(low).second) out.push_back(std::move(low));
  }
  return out;
}

inline std::vector<Violation> validate_policy(const Policy& p) {
  std::vector<Violation> out;
  if (p.id.empty()) {
    out.push_back({"NonEmptyId", p.id, "policy id must be non-empty"});
  }
  if (p.kind == PolicyKind::AccessControl) {
    if (p.effect != Effect::DenyUse) {
      out.push_back({"KindEffectMismatch", p.id,
                     "access_control policy requires effect deny_use"});
    }
    if (p.fairness_constraint) {
      out.push_back({"UnexpectedFairnessConstraint", p.id,
                     "access_control policy carries a fairness_constraint"});
    }
  } else {
    if (p.effect != Effect::RequireFairness) {
      out.push_back({"KindEffectMismatch", p.id,
                     "fairness policy requires effect require_fairness"});
    }
    if (!p.fairness_constraint) {
      out.push_back({"MissingFairnessConstraint", p.id,
                     "fairness policy requires a fairness_constraint"});
    } else if (p.fairness_constraint->metrics.empty()) {
      out.push_back({"MissingFairnessMetrics", p.id,
                     "fairness_constraint names no metrics"});
    }
  }
  if (p.attributes.empty()) {
    out.push_back({"EmptyAttributes", p.id, "attributes list is empty"});
  }
  {
    std::set<std::string> seen;
    for (const auto& a : p.attributes) {
      if (a != lowercase_ascii(a)) {
        out.push_back({"AttributeNotLowercase", p.id, a});
      }
      if (!seen.insert(a).second) {
        out.push_back({"DuplicateAttribute", p.id, a});
      }
    }
  }
  if (p.scope.time_window) {
    auto start = parse_rfc3339(p.scope.time_window->start);
    auto end = parse_rfc3339(p.scope.time_window->end);
    if (!start || !end) {
      out.push_back({"InvalidTimeWindow", p.id, "unparseable RFC3339 instant"});
    } else if (start->epoch_seconds > end->epoch_seconds) {
      out.push_back({"InvalidTimeWindow", p.id, "start > end"});
    }
  }
  if (p.provenance.sentence_index < 0) {
    out.push_back({"NegativeSentenceIndex", p.id,
                   std::to_string(p.provenance.sentence_index)});
  }
  if (!(p.provenance.extraction_confidence >= 0.0 &&
        p.provenance.extraction_confidence <= 1.0)) {
    out.push_back({"ConfidenceOutOfRange", p.id,
                   format_double(p.provenance.extraction_confidence)});
  }
  return out;
}

inline std::vector<Violation> validate_policy_set(const PolicySet& set) {
  std::vector<Violation> out;
  if (set.schema_version != kPolicySchemaVersion) {
    out.push_back({"SchemaVersion", "", set.schema_version});
  }
  std::set<std::string> ids;
  for (const auto& p : set.policies) {
    if (!ids.insert(p.id).second) {
      out.push_back({"id uniqueness", p.id, "duplicate policy id"});
    }
    auto v = validate_policy(p);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace fairgate

#pragma once

// Active fairness audit: probe, perturb each mapped sensitive field,
// re-probe, score, log. The report digest covers the canonical report body
// so a logged digest proves exactly one report content.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fairgate/audit_chain.hpp"
#include "fairgate/data_table.hpp"
#include "fairgate/enforcement.hpp"
#include "fairgate/errors.hpp"
#include "fairgate/metrics.hpp"
#include "fairgate/probe.hpp"

namespace fairgate {

enum class Verdict { Pass, Fail, Indeterminate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Indeterminate: return "indeterminate";
  }
  return "unknown";
}

struct AttributeResult {
  std::string policy_id;
  std::string attribute;
  std::string mapped_field;
  double deviation = 0.0;
  std::optional<double> disparate_impact;  // nullopt: undefined
  std::optional<double> fpr_gap;           // nullopt: not applicable
  std::optional<double> fnr_gap;
  std::string privileged_value;
  bool privileged_inferred = false;
  std::map<Metric, Verdict> verdicts;
  bool operator==(const AttributeResult&) const = default;
};

struct FairnessReport {
  std::string system_id;
  std::string dataset_id;
  std::vector<AttributeResult> results;
  std::int64_t probe_seed = 0;
  std::int64_t row_count = 0;
  std::string timestamp;
  std::string report_digest;
  bool operator==(const FairnessReport&) const = default;
};

inline json report_to_json(const FairnessReport& r, bool with_digest = true) {
  json results = json::array();
  for (const auto& a : r.results) {
    json verdicts = json::object();
    for (const auto& [metric, verdict] : a.verdicts) {
      verdicts[to_string(metric)] = to_string(verdict);
    }
    json entry{{"policy_id", a.policy_id},
               {"attribute", a.attribute},
               {"mapped_field", a.mapped_field},
               {"deviation", a.deviation},
               {"privileged_value", a.privileged_value},
               {"privileged_inferred", a.privileged_inferred},
               {"verdicts", verdicts}};
    entry["disparate_impact"] =
        a.disparate_impact ? json(*a.disparate_impact) : json("undefined");
    entry["fpr_gap"] = a.fpr_gap ? json(*a.fpr_gap) : json("not_applicable");
    entry["fnr_gap"] = a.fnr_gap ? json(*a.fnr_gap) : json("not_applicable");
    results.push_back(std::move(entry));
  }
  json j{{"system_id", r.system_id},
         {"dataset_id", r.dataset_id},
         {"results", results},
         {"probe_seed", r.probe_seed},
         {"row_count", r.row_count},
         {"timestamp", r.timestamp}};
  if (with_digest) j["report_digest"] = r.report_digest;
  return j;
}

inline std::string compute_report_digest(const FairnessReport& r) {
  return sha256_hex(canonical_dump(report_to_json(r, false)));
}

// Digest recomputation over an already-serialized report body.
inline std::string compute_report_digest(json body) {
  body.erase("report_digest");
  return sha256_hex(canonical_dump(body));
}

namespace detail {

inline std::optional<std::vector<double>> binary_labels(const DataTable& table) {
  if (!table.label_column) return std::nullopt;
  auto col = table.column_index(*table.label_column);
  if (!col) throw Error(Errc::MissingLabels, "label column not found", *table.label_column);
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const Value& v = row[*col];
    double d;
    if (std::holds_alternative<bool>(v)) {
      d = std::get<bool>(v) ? 1.0 : 0.0;
    } else if (std::holds_alternative<std::int64_t>(v)) {
      d = static_cast<double>(std::get<std::int64_t>(v));
    } else if (std::holds_alternative<double>(v)) {
      d = std::get<double>(v);
    } else {
      throw Error(Errc::InvalidValue, "label column must be numeric or boolean",
                  *table.label_column);
    }
    if (d != 0.0 && d != 1.0) {
      throw Error(Errc::InvalidValue, "labels must be binary 0/1", *table.label_column);
    }
    out.push_back(d);
  }
  return out;
}

// Highest positive rate wins; ties break to the lexicographically smallest
// value so inference is deterministic.
inline std::string infer_privileged_value(const DataTable& table,
                                          const std::vector<double>& outcomes,
                                          std::size_t col) {
  std::map<std::string, GroupStats> groups;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    GroupStats& g = groups[value_to_string(table.rows[r][col])];
    g.size += 1;
    if (outcomes[r] == 1.0) g.positives += 1;
  }
  std::string best;
  double best_rate = -1.0;
  for (const auto& [value, group] : groups) {
    double rate = group.rate();
    if (rate > best_rate) {
      best_rate = rate;
      best = value;
    }
  }
  return best;
}

}  // namespace detail

inline FairnessReport audit_fairness(const EnforcementPlan& plan,
                                     const DataTable& table,
                                     const ModelProbe& probe,
                                     std::int64_t seed, AuditChain& chain,
                                     const std::string& now = now_rfc3339(),
                                     const std::string& actor = "auditor") {
  if (plan.required_fairness_checks.empty()) {
    throw Error(Errc::InvalidValue, "plan has no fairness checks to run");
  }
  for (const auto& check : plan.required_fairness_checks) {
    for (const auto& field : check.mapped_fields) {
      if (!table.column_index(field)) {
        throw Error(Errc::StaleMapping, "mapped field missing from table", field);
      }
    }
  }
  std::vector<double> original = probe_model(probe, table);
  bool binary = detail::is_binary(original);
  auto labels = detail::binary_labels(table);

  FairnessReport report;
  report.system_id = plan.system_id;
  report.dataset_id = plan.dataset_id;
  report.probe_seed = seed;
  report.row_count = static_cast<std::int64_t>(table.rows.size());
  report.timestamp = now;

  for (const auto& check : plan.required_fairness_checks) {
    for (const auto& field : check.mapped_fields) {
      std::size_t col = *table.column_index(field);
      std::set<Value> distinct;
      for (const auto& row : table.rows) distinct.insert(row[col]);
      auto strategy = distinct.size() == 2 ? PerturbStrategy::FlipBinary
                                           : PerturbStrategy::RotateCategorical;
      DataTable perturbed = perturb_sensitive(table, field, strategy,
                                              static_cast<std::uint64_t>(seed));
      std::vector<double> after = probe_model(probe, perturbed);

      AttributeResult result;
      result.policy_id = check.policy_id;
      result.attribute = check.attribute;
      result.mapped_field = field;
      result.deviation = output_deviation(original, after);
      if (binary) {
        if (check.privileged_value) {
          result.privileged_value = *check.privileged_value;
        } else {
          result.privileged_value =
              detail::infer_privileged_value(table, original, col);
          result.privileged_inferred = true;
        }
        result.disparate_impact =
            disparate_impact(table, original, field, {result.privileged_value});
        if (labels) {
          MistreatmentGaps gaps = disparate_mistreatment(
              table, original, *labels, field, {result.privileged_value});
          result.fpr_gap = gaps.fpr_gap;
          result.fnr_gap = gaps.fnr_gap;
        }
      }
      for (Metric metric : check.metrics) {
        double threshold = check.thresholds.count(metric)
                               ? check.thresholds.at(metric)
                               : default_threshold(metric);
        Verdict verdict = Verdict::Indeterminate;
        switch (metric) {
          case Metric::OutputDeviation:
            verdict = result.deviation <= threshold ? Verdict::Pass : Verdict::Fail;
            break;
          case Metric::DisparateImpact:
            if (result.disparate_impact) {
              verdict = *result.disparate_impact >= threshold ? Verdict::Pass
                                                              : Verdict::Fail;
            }
            break;
          case Metric::DisparateMistreatment: {
            bool fail = (result.fpr_gap && *result.fpr_gap > threshold) ||
                        (result.fnr_gap && *result.fnr_gap > threshold);
            if (fail) {
              verdict = Verdict::Fail;
            } else if (result.fpr_gap && result.fnr_gap) {
              verdict = Verdict::Pass;
            }  // else some gap not applicable -> Indeterminate
            break;
          }
        }
        result.verdicts[metric] = verdict;
      }
      report.results.push_back(std::move(result));
    }
  }
  report.report_digest = compute_report_digest(report);

  json summary{{"pass", 0}, {"fail", 0}, {"indeterminate", 0}};
  for (const auto& r : report.results) {
    for (const auto& [metric, verdict] : r.verdicts) {
      summary[to_string(verdict)] = summary[to_string(verdict)].get<int>() + 1;
    }
  }
  try {
    chain.store_report(report.report_digest,
                       canonical_dump(report_to_json(report)));
    AuditEvent event;
    event.event_kind = EventKind::FairnessReport;
    event.timestamp = now;
    event.actor = actor;
    event.dataset_id = plan.dataset_id;
    event.payload = {{"report_digest", report.report_digest},
                     {"summary", summary}};
    chain.append_event(event);
  } catch (const Error& e) {
    if (e.code() != Errc::StorageFailure) throw;
    throw Error(Errc::AuditUnavailable,
                "fairness report could not be logged; discarding report");
  }
  return report;
}

}  // namespace fairgate

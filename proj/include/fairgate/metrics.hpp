#pragma once

// Perturbation strategies and the three fairness metrics. Undefined and
// not-applicable outcomes are values (nullopt), not errors, so audits can
// downgrade to Indeterminate instead of aborting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fairgate/data_table.hpp"
#include "fairgate/errors.hpp"

namespace fairgate {

enum class PerturbStrategy { FlipBinary, RotateCategorical, ResampleEmpirical };

inline const char* to_string(PerturbStrategy s) {
  switch (s) {
    case PerturbStrategy::FlipBinary: return "flip_binary";
    case PerturbStrategy::RotateCategorical: return "rotate_categorical";
    case PerturbStrategy::ResampleEmpirical: return "resample_empirical";
  }
  return "unknown";
}

namespace detail {

inline std::size_t require_column(const DataTable& table,
                                  const std::string& field) {
  auto idx = table.column_index(field);
  if (!idx) throw Error(Errc::InvalidValue, "no such column", field);
  return *idx;
}

}  // namespace detail

inline DataTable perturb_sensitive(const DataTable& table,
                                   const std::string& field,
                                   PerturbStrategy strategy,
                                   std::uint64_t seed = 0) {
  std::size_t col = detail::require_column(table, field);
  std::set<Value> distinct;
  for (const auto& row : table.rows) distinct.insert(row[col]);
  DataTable out = table;
  switch (strategy) {
    case PerturbStrategy::FlipBinary: {
      if (distinct.size() != 2) {
        throw Error(Errc::NotPerturbable,
                    "flip requires exactly 2 distinct values, found " +
                        std::to_string(distinct.size()),
                    field);
      }
      auto it = distinct.begin();
      Value a = *it++;
      Value b = *it;
      for (auto& row : out.rows) row[col] = (row[col] == a) ? b : a;
      break;
    }
    case PerturbStrategy::RotateCategorical: {
      if (distinct.size() < 2) {
        throw Error(Errc::NotPerturbable, "rotation requires at least 2 distinct values",
                    field);
      }
      std::vector<Value> order(distinct.begin(), distinct.end());
      std::map<Value, Value> next;
      for (std::size_t i = 0; i < order.size(); ++i) {
        next[order[i]] = order[(i + 1) % order.size()];
      }
      for (auto& row : out.rows) row[col] = next[row[col]];
      break;
    }
    case PerturbStrategy::ResampleEmpirical: {
      if (distinct.size() < 2) {
        throw Error(Errc::NotPerturbable, "resampling requires at least 2 distinct values",
                    field);
      }
      std::mt19937_64 rng(seed);
      std::vector<Value> column;
      column.reserve(table.rows.size());
      for (const auto& row : table.rows) column.push_back(row[col]);
      for (std::size_t r = 0; r < out.rows.size(); ++r) {
        // draw from the other rows' empirical distribution
        std::uniform_int_distribution<std::size_t> pick(0, column.size() - 2);
        std::size_t j = pick(rng);
        if (j >= r) ++j;
        out.rows[r][col] = column[j];
      }
      break;
    }
  }
  return out;
}

namespace detail {

inline bool is_binary(const std::vector<double>& outcomes) {
  for (double v : outcomes) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

}  // namespace detail

inline double output_deviation(const std::vector<double>& before,
                               const std::vector<double>& after) {
  if (before.size() != after.size()) {
    throw Error(Errc::LengthMismatch,
                "outcome lists differ in length: " + std::to_string(before.size()) +
                    " vs " + std::to_string(after.size()));
  }
  if (before.empty()) throw Error(Errc::InvalidValue, "empty outcome lists");
  if (detail::is_binary(before) && detail::is_binary(after)) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i] != after[i]) ++changed;
    }
    return static_cast<double>(changed) / static_cast<double>(before.size());
  }
  double lo = before[0], hi = before[0];
  for (double v : before) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : after) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double range = hi - lo;
  if (range == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    sum += std::abs(before[i] - after[i]);
  }
  return sum / (static_cast<double>(before.size()) * range);
}

namespace detail {

struct GroupStats {
  std::int64_t size = 0;
  std::int64_t positives = 0;
  double rate() const {
    return size == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(size);
  }
};

inline void require_binary_outcomes(const std::vector<double>& outcomes) {
  if (!is_binary(outcomes)) {
    throw Error(Errc::InvalidValue, "outcomes must be binary 0/1");
  }
}

}  // namespace detail

// Positive-rate ratio unprivileged/privileged. Multi-valued attributes take
// the worst (minimum) ratio over each unprivileged value group. Both rates
// zero is vacuous parity (1.0); privileged zero with any unprivileged
// positive is Undefined (nullopt).
inline std::optional<double> disparate_impact(
    const DataTable& table, const std::vector<double>& outcomes,
    const std::string& field, const std::set<std::string>& privileged_values) {
  std::size_t col = detail::require_column(table, field);
  if (outcomes.size() != table.rows.size()) {
    throw Error(Errc::LengthMismatch, "outcomes do not cover the table rows");
  }
  detail::require_binary_outcomes(outcomes);
  detail::GroupStats privileged;
  std::map<std::string, detail::GroupStats> unprivileged;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string v = value_to_string(table.rows[r][col]);
    detail::GroupStats& g = privileged_values.count(v) ? privileged : unprivileged[v];
    g.size += 1;
    if (outcomes[r] == 1.0) g.positives += 1;
  }
  if (privileged.size == 0) throw Error(Errc::EmptyGroup, "privileged group is empty", field);
  if (unprivileged.empty()) throw Error(Errc::EmptyGroup, "unprivileged group is empty", field);
  std::optional<double> worst;
  for (const auto& [value, group] : unprivileged) {
    double pr = privileged.rate();
    double ur = group.rate();
    if (pr == 0.0 && ur == 0.0) {
      if (!worst || 1.0 < *worst) worst = 1.0;
      continue;
    }
    if (pr == 0.0) return std::nullopt;  // Undefined
    double ratio = ur / pr;
    if (!worst || ratio < *worst) worst = ratio;
  }
  return worst;
}

struct MistreatmentGaps {
  std::optional<double> fpr_gap;  // nullopt: not applicable (no actual negatives)
  std::optional<double> fnr_gap;  // nullopt: not applicable (no actual positives)
  bool operator==(const MistreatmentGaps&) const = default;
};

inline MistreatmentGaps disparate_mistreatment(
    const DataTable& table, const std::vector<double>& outcomes,
    const std::vector<double>& labels, const std::string& field,
    const std::set<std::string>& privileged_values) {
  std::size_t col = detail::require_column(table, field);
  if (outcomes.size() != table.rows.size() || labels.size() != table.rows.size()) {
    throw Error(Errc::LengthMismatch, "outcomes/labels do not cover the table rows");
  }
  if (labels.empty()) throw Error(Errc::MissingLabels, "no labels designated");
  detail::require_binary_outcomes(outcomes);
  if (!detail::is_binary(labels)) {
    throw Error(Errc::InvalidValue, "labels must be binary 0/1");
  }
  struct Confusion {
    std::int64_t fp = 0, tn = 0, fn = 0, tp = 0;
  };
  Confusion priv, unpriv;
  bool any_priv = false, any_unpriv = false;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string v = value_to_string(table.rows[r][col]);
    bool is_priv = privileged_values.count(v) > 0;
    Confusion& c = is_priv ? priv : unpriv;
    (is_priv ? any_priv : any_unpriv) = true;
    bool predicted = outcomes[r] == 1.0;
    bool actual = labels[r] == 1.0;
    if (actual) {
      (predicted ? c.tp : c.fn) += 1;
    } else {
      (predicted ? c.fp : c.tn) += 1;
    }
  }
  if (!any_priv) throw Error(Errc::EmptyGroup, "privileged group is empty", field);
  if (!any_unpriv) throw Error(Errc::EmptyGroup, "unprivileged group is empty", field);
  auto rate = [](std::int64_t num, std::int64_t denom) -> std::optional<double> {
    if (denom == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(denom);
  };
  MistreatmentGaps gaps;
  auto fpr_p = rate(priv.fp, priv.fp + priv.tn);
  auto fpr_u = rate(unpriv.fp, unpriv.fp + unpriv.tn);
  if (fpr_p && fpr_u) gaps.fpr_gap = std::abs(*fpr_p - *fpr_u);
  auto fnr_p = rate(priv.fn, priv.fn + priv.tp);
  auto fnr_u = rate(unpriv.fn, unpriv.fn + unpriv.tp);
  if (fnr_p && fnr_u) gaps.fnr_gap = std::abs(*fnr_p - *fnr_u);
  return gaps;
}

}  // namespace fairgate

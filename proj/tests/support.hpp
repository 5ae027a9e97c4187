#pragma once

// Shared test helpers. The oracle_* functions are deliberately independent
// reimplementations (plain loops over simple containers) used to cross-check
// the library; they must not call into fairgate metric code.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fairgate/fairgate.hpp"

namespace testsupport {

inline std::filesystem::path fresh_dir(const std::string& tag) {
  auto base = std::filesystem::temp_directory_path() /
              ("fairgate-" + tag + "-XXXXXX");
  std::string tmpl = base.string();
  if (!mkdtemp(tmpl.data())) {
    throw std::runtime_error("mkdtemp failed");
  }
  return std::filesystem::path(tmpl);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// --------------------------------------------------------------------------
// Random policy sets (valid by construction) for round-trip checks.

inline fairgate::PolicySet random_policy_set(std::mt19937_64& rng) {
  using namespace fairgate;
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  static const std::vector<std::string> kAttrs{
      "gender", "race", "age", "religion", "zip", "nationality", "disability"};
  static const std::vector<std::string> kDatasets{"credit-apps", "loans-2021",
                                                  "hiring"};
  PolicySet set;
  set.source_digest = sha256_hex("seed:" + std::to_string(pick(0, 1 << 30)));
  std::int64_t n = pick(0, 5);
  for (std::int64_t i = 0; i < n; ++i) {
    Policy p;
    p.id = "p" + std::to_string(i);
    bool fairness = pick(0, 1) == 1;
    std::set<std::string> chosen;
    std::int64_t attrs = pick(1, 3);
    while (static_cast<std::int64_t>(chosen.size()) < attrs) {
      chosen.insert(kAttrs[static_cast<size_t>(pick(0, kAttrs.size() - 1))]);
    }
    p.attributes.assign(chosen.begin(), chosen.end());
    if (pick(0, 2) == 0) {
      p.target_dataset = kDatasets[static_cast<size_t>(pick(0, 2))];
    }
    if (fairness) {
      p.kind = PolicyKind::Fairness;
      p.effect = Effect::RequireFairness;
      FairnessConstraint fc;
      fc.metrics.insert(Metric::OutputDeviation);
      if (pick(0, 1)) fc.metrics.insert(Metric::DisparateImpact);
      if (pick(0, 1)) fc.metrics.insert(Metric::DisparateMistreatment);
      for (Metric m : fc.metrics) {
        if (pick(0, 1)) fc.thresholds[m] = pick(0, 100) / 100.0;
      }
      if (pick(0, 1)) fc.privileged_values[p.attributes.front()] = "male";
      p.fairness_constraint = fc;
    } else {
      p.kind = PolicyKind::AccessControl;
      p.effect = Effect::DenyUse;
    }
    if (pick(0, 2) == 0) {
      std::int64_t start = pick(0, 2000000000);
      p.scope.time_window = TimeWindow{format_rfc3339(start),
                                       format_rfc3339(start + pick(0, 86400))};
    }
    if (pick(0, 2) == 0) p.scope.jurisdiction = "WI";
    p.provenance.source_document = "doc-" + std::to_string(pick(0, 9)) + ".txt";
    p.provenance.sentence_index = pick(0, 40);
    p.provenance.sentence_text = "sentence <" + std::to_string(i) + "> & \"quoted\"";
    p.provenance.extraction_confidence = pick(0, 1) ? 1.0 : 0.8;
    set.policies.push_back(std::move(p));
  }
  return set;
}

// --------------------------------------------------------------------------
// Independent metric oracles over plain vectors.

inline double oracle_deviation(const std::vector<double>& a,
                               const std::vector<double>& b) {
  std::set<double> distinct(a.begin(), a.end());
  distinct.insert(b.begin(), b.end());
  bool binary = true;
  for (double v : distinct) {
    if (v != 0.0 && v != 1.0) binary = false;
  }
  if (binary) {
    double flips = 0;
    for (size_t i = 0; i < a.size(); ++i) flips += a[i] != b[i] ? 1.0 : 0.0;
    return flips / static_cast<double>(a.size());
  }
  double lo = *distinct.begin(), hi = *distinct.rbegin();
  if (hi == lo) return 0.0;
  double total = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    total += a[i] >= b[i] ? a[i] - b[i] : b[i] - a[i];
  }
  return total / static_cast<double>(a.size()) / (hi - lo);
}

// groups[i] names row i's group; outcome 1.0 counts as positive.
inline std::optional<double> oracle_di(const std::vector<std::string>& groups,
                                       const std::vector<double>& outcomes,
                                       const std::string& privileged) {
  std::map<std::string, std::pair<double, double>> tally;  // positives, total
  for (size_t i = 0; i < groups.size(); ++i) {
    tally[groups[i]].first += outcomes[i] == 1.0 ? 1.0 : 0.0;
    tally[groups[i]].second += 1.0;
  }
  double priv_rate = tally[privileged].first / tally[privileged].second;
  std::optional<double> worst;
  for (const auto& [group, counts] : tally) {
    if (group == privileged) continue;
    double rate = counts.first / counts.second;
    double ratio;
    if (priv_rate == 0.0 && rate == 0.0) {
      ratio = 1.0;
    } else if (priv_rate == 0.0) {
      return std::nullopt;
    } else {
      ratio = rate / priv_rate;
    }
    if (!worst || ratio < *worst) worst = ratio;
  }
  return worst ? worst : std::optional<double>(1.0);
}

struct OracleGaps {
  std::optional<double> fpr_gap;
  std::optional<double> fnr_gap;
};

inline OracleGaps oracle_gaps(const std::vector<std::string>& groups,
                              const std::vector<double>& outcomes,
                              const std::vector<double>& labels,
                              const std::string& privileged) {
  double pfp = 0, pneg = 0, pfn = 0, ppos = 0;
  double ufp = 0, uneg = 0, ufn = 0, upos = 0;
  for (size_t i = 0; i < groups.size(); ++i) {
    bool priv = groups[i] == privileged;
    bool positive_label = labels[i] == 1.0;
    bool positive_outcome = outcomes[i] == 1.0;
    if (positive_label) {
      (priv ? ppos : upos) += 1;
      if (!positive_outcome) (priv ? pfn : ufn) += 1;
    } else {
      (priv ? pneg : uneg) += 1;
      if (positive_outcome) (priv ? pfp : ufp) += 1;
    }
  }
  OracleGaps out;
  if (pneg > 0 && uneg > 0) {
    double gap = pfp / pneg - ufp / uneg;
    out.fpr_gap = gap < 0 ? -gap : gap;
  }
  if (ppos > 0 && upos > 0) {
    double gap = pfn / ppos - ufn / upos;
    out.fnr_gap = gap < 0 ? -gap : gap;
  }
  return out;
}

}  // namespace testsupport

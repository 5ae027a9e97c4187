#pragma once

// Append-only hash chain. Each entry's hash covers the previous entry's
// hash plus the canonical JSON of its event, so any retroactive edit breaks
// verification. Storage is one JSON object per line; large report bodies
// live in a digest-keyed side directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "fairgate/canonical.hpp"
#include "fairgate/errors.hpp"

namespace fairgate {

inline constexpr const char* kGenesisHash =
    "0000000000000000000000000000000000000000000000000000000000000000";

enum class EventKind {
  AccessDecision,
  FairnessReport,
  PlanCreated,
  PolicyRegistered,
  SessionFailed
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::AccessDecision: return "access_decision";
    case EventKind::FairnessReport: return "fairness_report";
    case EventKind::PlanCreated: return "plan_created";
    case EventKind::PolicyRegistered: return "policy_registered";
    case EventKind::SessionFailed: return "session_failed";
  }
  return "unknown";
}

inline std::optional<EventKind> event_kind_from(std::string_view s) {
  if (s == "access_decision") return EventKind::AccessDecision;
  if (s == "fairness_report") return EventKind::FairnessReport;
  if (s == "plan_created") return EventKind::PlanCreated;
  if (s == "policy_registered") return EventKind::PolicyRegistered;
  if (s == "session_failed") return EventKind::SessionFailed;
  return std::nullopt;
}

struct AuditEvent {
  EventKind event_kind = EventKind::AccessDecision;
  std::string timestamp;  // RFC 3339 UTC
  std::string actor;
  std::string dataset_id;
  json payload = json::object();
  bool operator==(const AuditEvent&) const = default;
};

inline json event_to_json(const AuditEvent& e) {
  return json{{"actor", e.actor},
              {"dataset_id", e.dataset_id},
              {"event_kind", to_string(e.event_kind)},
              {"payload", e.payload},
              {"timestamp", e.timestamp}};
}

inline AuditEvent event_from_json(const json& j) {
  AuditEvent e;
  auto kind = event_kind_from(j.at("event_kind").get<std::string>());
  if (!kind) {
    throw Error(Errc::MalformedDocument, "unknown event_kind",
                j.at("event_kind").get<std::string>());
  }
  e.event_kind = *kind;
  e.timestamp = j.at("timestamp").get<std::string>();
  e.actor = j.at("actor").get<std::string>();
  e.dataset_id = j.at("dataset_id").get<std::string>();
  e.payload = j.at("payload");
  return e;
}

struct AuditEntry {
  std::int64_t index = 0;
  std::string prev_hash;
  AuditEvent event;
  std::string entry_hash;
  bool operator==(const AuditEntry&) const = default;
};

inline std::string compute_entry_hash(const std::string& prev_hash,
                                      const AuditEvent& event) {
  return sha256_hex(prev_hash + canonical_dump(event_to_json(event)));
}

inline json entry_to_json(const AuditEntry& e) {
  return json{{"index", e.index},
              {"prev_hash", e.prev_hash},
              {"event", event_to_json(e.event)},
              {"entry_hash", e.entry_hash}};
}

// Base chain keeps entries in memory; persistence is a subclass concern.
// append_event only admits an entry once persist() succeeded, so a storage
// fault leaves the in-memory view untouched.
class AuditChain {
 public:
  virtual ~AuditChain() = default;

  const std::vector<AuditEntry>& entries() const { return entries_; }

  AuditEntry append_event(const AuditEvent& event) {
    if (!parse_rfc3339(event.timestamp)) {
      throw Error(Errc::InvalidValue, "event timestamp is not RFC 3339 UTC",
                  event.timestamp);
    }
    AuditEntry entry;
    entry.index = static_cast<std::int64_t>(entries_.size());
    entry.prev_hash = entries_.empty() ? kGenesisHash : entries_.back().entry_hash;
    entry.event = event;
    entry.entry_hash = compute_entry_hash(entry.prev_hash, event);
    persist(entry);
    entries_.push_back(entry);
    return entry;
  }

  std::string head_hash() const {
    return entries_.empty() ? kGenesisHash : entries_.back().entry_hash;
  }

  virtual void store_report(const std::string& digest, const std::string& body) {
    reports_[digest] = body;
  }

  virtual std::optional<std::string> load_report(const std::string& digest) const {
    auto it = reports_.find(digest);
    if (it == reports_.end()) return std::nullopt;
    return it->second;
  }

 protected:
  virtual void persist(const AuditEntry&) {}

  std::vector<AuditEntry> entries_;
  std::map<std::string, std::string> reports_;
};

class FileAuditChain : public AuditChain {
 public:
  explicit FileAuditChain(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in.is_open()) return;  // fresh chain
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
        AuditEntry entry;
        entry.index = j.at("index").get<std::int64_t>();
        entry.prev_hash = j.at("prev_hash").get<std::string>();
        entry.event = event_from_json(j.at("event"));
        entry.entry_hash = j.at("entry_hash").get<std::string>();
        entries_.push_back(std::move(entry));
      } catch (const json::exception& e) {
        throw Error(Errc::MalformedDocument, std::string("chain: ") + e.what(),
                    path_.string(), line_no);
      }
    }
  }

  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path reports_dir() const {
    return path_.string() + ".reports";
  }

  void store_report(const std::string& digest, const std::string& body) override {
    std::error_code ec;
    std::filesystem::create_directories(reports_dir(), ec);
    if (ec) throw Error(Errc::StorageFailure, "cannot create report store", reports_dir().string());
    auto file = reports_dir() / (digest + ".json");
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    out.flush();
    if (!out.good()) throw Error(Errc::StorageFailure, "report write failed", file.string());
  }

  std::optional<std::string> load_report(const std::string& digest) const override {
    std::ifstream in(reports_dir() / (digest + ".json"), std::ios::binary);
    if (!in.is_open()) return std::nullopt;
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  }

 protected:
  void persist(const AuditEntry& entry) override {
    std::string line = canonical_dump(entry_to_json(entry)) + "\n";
    int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw Error(Errc::StorageFailure, "cannot open chain file", path_.string());
    const char* data = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      ssize_t n = ::write(fd, data, left);
      if (n < 0) {
        ::close(fd);
        throw Error(Errc::StorageFailure, "chain write failed", path_.string());
      }
      data += n;
      left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
      ::close(fd);
      throw Error(Errc::StorageFailure, "chain fsync failed", path_.string());
    }
    ::close(fd);
  }

 private:
  std::filesystem::path path_;
};

// --------------------------------------------------------------------------
// Verification

struct VerifyResult {
  bool valid = true;
  std::optional<std::int64_t> first_invalid;
  std::optional<std::string> reason;
  bool operator==(const VerifyResult&) const = default;
};

namespace detail {

inline VerifyResult invalid_at(std::int64_t index, std::string reason) {
  return VerifyResult{false, index, std::move(reason)};
}

}  // namespace detail

inline VerifyResult verify_entries(const std::vector<AuditEntry>& entries) {
  std::string expected_prev = kGenesisHash;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const AuditEntry& e = entries[i];
    auto idx = static_cast<std::int64_t>(i);
    if (e.index != idx) return detail::invalid_at(idx, "index mismatch");
    if (e.prev_hash != expected_prev) return detail::invalid_at(idx, "link mismatch");
    if (compute_entry_hash(e.prev_hash, e.event) != e.entry_hash) {
      return detail::invalid_at(idx, "hash mismatch");
    }
    expected_prev = e.entry_hash;
  }
  return VerifyResult{};
}

inline VerifyResult verify_chain(const AuditChain& chain) {
  return verify_entries(chain.entries());
}

// Verifies raw chain-file bytes without trusting any parse step: a line that
// fails to parse or re-serialize cleanly is itself a corruption finding.
inline VerifyResult verify_chain_text(const std::string& text) {
  std::string expected_prev = kGenesisHash;
  std::int64_t index = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (nl == std::string::npos ? text.size() : nl) - pos);
    pos = (nl == std::string::npos) ? text.size() : nl + 1;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      return detail::invalid_at(index, "malformed entry");
    }
    auto idx_it = j.find("index");
    auto prev_it = j.find("prev_hash");
    auto event_it = j.find("event");
    auto hash_it = j.find("entry_hash");
    if (idx_it == j.end() || prev_it == j.end() || event_it == j.end() ||
        hash_it == j.end() || !idx_it->is_number_integer() ||
        !prev_it->is_string() || !hash_it->is_string()) {
      return detail::invalid_at(index, "malformed entry");
    }
    if (idx_it->get<std::int64_t>() != index) {
      return detail::invalid_at(index, "index mismatch");
    }
    std::string prev = prev_it->get<std::string>();
    std::string stored = hash_it->get<std::string>();
    if (!is_hex_digest(prev) || !is_hex_digest(stored)) {
      return detail::invalid_at(index, "malformed entry");
    }
    if (prev != expected_prev) return detail::invalid_at(index, "link mismatch");
    std::string recomputed = sha256_hex(prev + canonical_dump(*event_it));
    if (recomputed != stored) return detail::invalid_at(index, "hash mismatch");
    expected_prev = stored;
    ++index;
  }
  return VerifyResult{};
}

inline VerifyResult verify_chain_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) return VerifyResult{};  // absent chain == empty chain
  std::string text{std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>()};
  return verify_chain_text(text);
}

// --------------------------------------------------------------------------
// Query

struct LogFilter {
  std::optional<std::string> actor;
  std::optional<std::string> dataset_id;
  std::optional<EventKind> event_kind;
  std::optional<std::pair<std::string, std::string>> time_range;  // inclusive
};

inline std::vector<AuditEntry> query_log(const AuditChain& chain,
                                         const LogFilter& filter) {
  std::vector<AuditEntry> out;
  std::optional<std::int64_t> t0, t1;
  if (filter.time_range) {
    auto lo = parse_rfc3339(filter.time_range->first);
    auto hi = parse_rfc3339(filter.time_range->second);
    if (!lo || !hi) {
      throw Error(Errc::InvalidValue, "time range bounds must be RFC 3339 UTC");
    }
    t0 = lo->epoch_seconds;
    t1 = hi->epoch_seconds;
  }
  for (const auto& e : chain.entries()) {
    if (filter.actor && e.event.actor != *filter.actor) continue;
    if (filter.dataset_id && e.event.dataset_id != *filter.dataset_id) continue;
    if (filter.event_kind && e.event.event_kind != *filter.event_kind) continue;
    if (t0) {
      auto t = parse_rfc3339(e.event.timestamp);
      if (!t || t->epoch_seconds < *t0 || t->epoch_seconds > *t1) continue;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace fairgate

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace fairgate {

enum class Errc {
  MalformedDocument,
  InvariantViolation,
  MalformedGraph,
  DanglingEdge,
  HypernymCycle,
  ManualSpecificationRequired,
  StaleMapping,
  AuditUnavailable,
  StorageFailure,
  ProbeTimeout,
  ProtocolViolation,
  ProbeCrashed,
  NotPerturbable,
  LengthMismatch,
  EmptyGroup,
  MissingLabels,
  InvalidValue,
  IoError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedDocument: return "malformed_document";
    case Errc::InvariantViolation: return "invariant_violation";
    case Errc::MalformedGraph: return "malformed_graph";
    case Errc::DanglingEdge: return "dangling_edge";
    case Errc::HypernymCycle: return "hypernym_cycle";
    case Errc::ManualSpecificationRequired: return "manual_specification_required";
    case Errc::StaleMapping: return "stale_mapping";
    case Errc::AuditUnavailable: return "audit_unavailable";
    case Errc::StorageFailure: return "storage_failure";
    case Errc::ProbeTimeout: return "probe_timeout";
    case Errc::ProtocolViolation: return "protocol_violation";
    case Errc::ProbeCrashed: return "probe_crashed";
    case Errc::NotPerturbable: return "not_perturbable";
    case Errc::LengthMismatch: return "length_mismatch";
    case Errc::EmptyGroup: return "empty_group";
    case Errc::MissingLabels: return "missing_labels";
    case Errc::InvalidValue: return "invalid_value";
    case Errc::IoError: return "io_error";
  }
  return "unknown";
}

// Single error type for all throwing operations. `subject` carries the
// offending item (policy id, edge endpoint, field name, group name...);
// `line`/`column` are set for document syntax errors.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, std::string subject = {},
        std::optional<std::uint64_t> line = std::nullopt,
        std::optional<std::uint64_t> column = std::nullopt)
      : std::runtime_error(compose(code, message, subject, line)),
        code_(code),
        subject_(std::move(subject)),
        line_(line),
        column_(column) {}

  Errc code() const { return code_; }
  const std::string& subject() const { return subject_; }
  std::optional<std::uint64_t> line() const { return line_; }
  std::optional<std::uint64_t> column() const { return column_; }

 private:
  static std::string compose(Errc code, const std::string& message,
                             const std::string& subject,
                             std::optional<std::uint64_t> line) {
    std::string out = errc_name(code);
    out += ": ";
    out += message;
    if (!subject.empty()) {
      out += " [";
      out += subject;
      out += "]";
    }
    if (line) {
      out += " (line ";
      out += std::to_string(*line);
      out += ")";
    }
    return out;
  }

  Errc code_;
  std::string subject_;
  std::optional<std::uint64_t> line_;
  std::optional<std::uint64_t> column_;
};

}  // namespace fairgate

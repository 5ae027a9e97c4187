#pragma once

// Tabular fixture data: typed cells, CSV ingestion with header row and
// simple type inference (integer, then real, then boolean, else string).

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fairgate/canonical.hpp"
#include "fairgate/concept_graph.hpp"
#include "fairgate/errors.hpp"

namespace fairgate {

using Value = std::variant<bool, std::int64_t, double, std::string>;

inline std::string value_to_string(const Value& v) {
  switch (v.index()) {
    case 0: return std::get<bool>(v) ? "true" : "false";
    case 1: return std::to_string(std::get<std::int64_t>(v));
    case 2: return format_double(std::get<double>(v));
    default: return std::get<std::string>(v);
  }
}

inline json value_to_json(const Value& v) {
  switch (v.index()) {
    case 0: return std::get<bool>(v);
    case 1: return std::get<std::int64_t>(v);
    case 2: return std::get<double>(v);
    default: return std::get<std::string>(v);
  }
}

struct DataTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  std::optional<std::string> label_column;

  std::optional<std::size_t> column_index(const std::string& name) const {
    std::string wanted = normalize_term(name);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (normalize_term(columns[i]) == wanted) return i;
    }
    return std::nullopt;
  }

  bool operator==(const DataTable&) const = default;
};

namespace detail {

inline std::optional<std::int64_t> parse_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::int64_t out = 0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return out;
}

inline std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  double out = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  if (!std::isfinite(out)) return std::nullopt;
  return out;
}

// RFC 4180 field splitting; accepts both LF and CRLF row endings.
inline std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t i = 0;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    records.push_back(record);
    record.clear();
    any = false;
  };
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
        ++i;
        continue;
      }
      field += c;
      ++i;
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
      ++i;
      continue;
    }
    if (c == ',') {
      end_field();
      any = true;
      ++i;
      continue;
    }
    if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      i += 2;
      continue;
    }
    if (c == '\n') {
      end_record();
      ++i;
      continue;
    }
    field += c;
    any = true;
    ++i;
  }
  if (quoted) throw Error(Errc::MalformedDocument, "csv: unterminated quoted field");
  if (any || !field.empty() || !record.empty()) end_record();
  return records;
}

inline Value coerce_cell(const std::string& raw, FieldType type,
                         const std::string& column) {
  switch (type) {
    case FieldType::Integer: {
      auto v = parse_integer(raw);
      if (!v) throw Error(Errc::InvalidValue, "csv: not an integer: " + raw, column);
      return *v;
    }
    case FieldType::Real: {
      auto v = parse_real(raw);
      if (!v) throw Error(Errc::InvalidValue, "csv: not a number: " + raw, column);
      return *v;
    }
    case FieldType::Boolean: {
      if (raw == "true") return true;
      if (raw == "false") return false;
      throw Error(Errc::InvalidValue, "csv: not a boolean: " + raw, column);
    }
    case FieldType::String:
    case FieldType::Categorical:
      return raw;
  }
  return raw;
}

}  // namespace detail

// Columns covered by `schema` use the declared type; the rest are inferred
// from the full column contents.
inline DataTable load_csv(const std::string& text,
                          const SchemaDescriptor* schema = nullptr) {
  auto records = detail::split_csv(text);
  if (records.empty()) throw Error(Errc::MalformedDocument, "csv: missing header row");
  DataTable table;
  table.columns = records[0];
  std::set<std::string> seen;
  for (const auto& c : table.columns) {
    if (!seen.insert(normalize_term(c)).second) {
      throw Error(Errc::InvariantViolation, "csv: duplicate column", c);
    }
  }
  std::size_t arity = table.columns.size();
  std::vector<std::optional<FieldType>> declared(arity);
  if (schema) {
    for (const auto& f : schema->fields) {
      for (std::size_t i = 0; i < arity; ++i) {
        if (normalize_term(table.columns[i]) == normalize_term(f.name)) {
          declared[i] = f.declared_type;
        }
      }
    }
  }
  std::vector<FieldType> types(arity, FieldType::String);
  for (std::size_t col = 0; col < arity; ++col) {
    if (declared[col]) {
      types[col] = *declared[col];
      continue;
    }
    bool all_int = true, all_real = true, all_bool = true;
    for (std::size_t r = 1; r < records.size(); ++r) {
      if (records[r].size() != arity) continue;  // reported below
      const std::string& cell = records[r][col];
      if (all_int && !detail::parse_integer(cell)) all_int = false;
      if (all_real && !detail::parse_real(cell)) all_real = false;
      if (all_bool && cell != "true" && cell != "false") all_bool = false;
    }
    if (records.size() > 1) {
      if (all_int) {
        types[col] = FieldType::Integer;
      } else if (all_real) {
        types[col] = FieldType::Real;
      } else if (all_bool) {
        types[col] = FieldType::Boolean;
      }
    }
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != arity) {
      throw Error(Errc::MalformedDocument,
                  "csv: row " + std::to_string(r) + " has " +
                      std::to_string(records[r].size()) + " fields, expected " +
                      std::to_string(arity));
    }
    std::vector<Value> row;
    row.reserve(arity);
    for (std::size_t col = 0; col < arity; ++col) {
      row.push_back(detail::coerce_cell(records[r][col], types[col],
                                        table.columns[col]));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline json row_to_json(const DataTable& table, std::size_t row) {
  json out = json::object();
  for (std::size_t col = 0; col < table.columns.size(); ++col) {
    out[table.columns[col]] = value_to_json(table.rows[row][col]);
  }
  return out;
}

}  // namespace fairgate

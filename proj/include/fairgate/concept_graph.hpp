#pragma once

// Loadable mini-ontology: concepts joined by synonym and hypernym edges plus
// a surface-form dictionary. Resolution maps free-text terms onto concepts;
// mapping matches policy attributes against dataset schema fields.

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fairgate/canonical.hpp"
#include "fairgate/errors.hpp"
#include "fairgate/policy.hpp"

namespace fairgate {

enum class ResolutionKind { Exact, Normalized, Synonym, Hypernym };

inline const char* to_string(ResolutionKind k) {
  switch (k) {
    case ResolutionKind::Exact: return "exact";
    case ResolutionKind::Normalized: return "normalized";
    case ResolutionKind::Synonym: return "synonym";
    case ResolutionKind::Hypernym: return "hypernym";
  }
  return "unknown";
}

struct ConceptGraph {
  std::set<std::string> concepts;
  std::vector<std::pair<std::string, std::string>> synonym_pairs;
  std::vector<std::pair<std::string, std::string>> hypernym_pairs;  // child, parent
  std::map<std::string, std::string> surface_forms;  // token -> concept

  // Symmetric adjacency, split by edge type.
  std::map<std::string, std::set<std::string>> synonym_adjacent;
  std::map<std::string, std::set<std::string>> hypernym_adjacent;

  bool has_concept(const std::string& id) const { return concepts.count(id) > 0; }
};

// Lowercase, split on non-alphanumeric runs, rejoin with single spaces.
inline std::string normalize_term(std::string_view term) {
  std::string out;
  bool in_token = false;
  for (unsigned char c : term) {
    if (std::isalnum(c)) {
      if (!in_token && !out.empty()) out += ' ';
      out += static_cast<char>(std::tolower(c));
      in_token = true;
    } else {
      in_token = false;
    }
  }
  return out;
}

inline ConceptGraph load_concept_graph(std::string_view data) {
  json j;
  try {
    j = json::parse(data);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedGraph, e.what());
  }
  if (!j.is_object()) throw Error(Errc::MalformedGraph, "graph must be a JSON object");
  ConceptGraph g;
  auto concepts = j.find("concepts");
  if (concepts == j.end() || !concepts->is_array()) {
    throw Error(Errc::MalformedGraph, "missing \"concepts\" array");
  }
  for (const auto& c : *concepts) {
    if (!c.is_string()) throw Error(Errc::MalformedGraph, "concept ids must be strings");
    std::string id = c.get<std::string>();
    if (id != lowercase_ascii(id)) {
      throw Error(Errc::MalformedGraph, "concept ids must be lowercase", id);
    }
    g.concepts.insert(std::move(id));
  }
  auto read_pairs = [&](const char* key)
      -> std::vector<std::pair<std::string, std::string>> {
    std::vector<std::pair<std::string, std::string>> out;
    auto it = j.find(key);
    if (it == j.end()) return out;
    if (!it->is_array()) {
      throw Error(Errc::MalformedGraph, std::string(key) + " must be an array of pairs");
    }
    for (const auto& pair : *it) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
          !pair[1].is_string()) {
        throw Error(Errc::MalformedGraph, std::string(key) + " entries must be string pairs");
      }
      std::string a = pair[0].get<std::string>();
      std::string b = pair[1].get<std::string>();
      for (const auto& endpoint : {a, b}) {
        if (!g.has_concept(endpoint)) {
          throw Error(Errc::DanglingEdge, "edge endpoint is not a declared concept",
                      endpoint);
        }
      }
      out.emplace_back(std::move(a), std::move(b));
    }
    return out;
  };
  g.synonym_pairs = read_pairs("synonyms");
  g.hypernym_pairs = read_pairs("hypernyms");
  if (auto it = j.find("surface_forms"); it != j.end()) {
    if (!it->is_object()) throw Error(Errc::MalformedGraph, "surface_forms must be an object");
    for (const auto& [token, value] : it->items()) {
      std::string target;
      if (value.is_string()) {
        target = value.get<std::string>();
      } else if (value.is_object() && value.contains("concept") &&
                 value["concept"].is_string()) {
        // optional "lang" tag is reserved and currently ignored
        target = value["concept"].get<std::string>();
      } else {
        throw Error(Errc::MalformedGraph, "surface form values must be a concept id", token);
      }
      if (!g.has_concept(target)) {
        throw Error(Errc::DanglingEdge, "surface form maps to undeclared concept", target);
      }
      g.surface_forms[normalize_term(token)] = target;
    }
  }
  for (const auto& [a, b] : g.synonym_pairs) {
    g.synonym_adjacent[a].insert(b);
    g.synonym_adjacent[b].insert(a);
  }
  for (const auto& [child, parent] : g.hypernym_pairs) {
    g.hypernym_adjacent[child].insert(parent);
    g.hypernym_adjacent[parent].insert(child);
  }
  // hypernym edges must be acyclic (directed child -> parent)
  {
    std::map<std::string, std::vector<std::string>> parents;
    for (const auto& [child, parent] : g.hypernym_pairs) {
      parents[child].push_back(parent);
    }
    std::map<std::string, int> state;  // 0 new, 1 open, 2 done
    std::vector<std::string> stack;
    std::function<void(const std::string&)> visit = [&](const std::string& node) {
      state[node] = 1;
      stack.push_back(node);
      for (const auto& parent : parents[node]) {
        if (state[parent] == 1) {
          std::string path;
          auto it = std::find(stack.begin(), stack.end(), parent);
          for (; it != stack.end(); ++it) path += *it + " -> ";
          path += parent;
          throw Error(Errc::HypernymCycle, "hypernym edges form a cycle", path);
        }
        if (state[parent] == 0) visit(parent);
      }
      stack.pop_back();
      state[node] = 2;
    };
    for (const auto& c : g.concepts) {
      if (state[c] == 0) visit(c);
    }
  }
  return g;
}

struct Resolution {
  std::string concept_id;
  ResolutionKind kind = ResolutionKind::Exact;
  bool operator==(const Resolution&) const = default;
};

// Tries the exact surface form, then the normalized (and singularized) form,
// then one-hop synonym canonicalization for bare concept ids.
inline std::optional<Resolution> resolve_term(const std::string& term,
                                              const ConceptGraph& g) {
  auto lookup = [&](const std::string& token,
                    bool normalized) -> std::optional<Resolution> {
    auto it = g.surface_forms.find(token);
    if (it == g.surface_forms.end()) return std::nullopt;
    if (token == it->second) {
      return Resolution{it->second,
                        normalized ? ResolutionKind::Normalized : ResolutionKind::Exact};
    }
    return Resolution{it->second, ResolutionKind::Synonym};
  };
  if (auto hit = lookup(term, false)) return hit;
  std::string normalized = normalize_term(term);
  std::vector<std::string> candidates{normalized};
  if (!normalized.empty() && normalized.back() == 's') {
    candidates.push_back(normalized.substr(0, normalized.size() - 1));
  }
  for (const auto& candidate : candidates) {
    if (auto hit = lookup(candidate, candidate != term)) return hit;
  }
  for (const auto& candidate : candidates) {
    if (!g.has_concept(candidate)) continue;
    // Concept without a surface form: canonicalize through one synonym hop
    // when a neighbour is a canonical concept (its own surface form).
    if (auto adj = g.synonym_adjacent.find(candidate);
        adj != g.synonym_adjacent.end()) {
      for (const auto& neighbour : adj->second) {
        auto sf = g.surface_forms.find(neighbour);
        if (sf != g.surface_forms.end() && sf->second == neighbour) {
          return Resolution{neighbour, ResolutionKind::Synonym};
        }
      }
    }
    return Resolution{candidate, candidate == term ? ResolutionKind::Exact
                                                   : ResolutionKind::Normalized};
  }
  return std::nullopt;
}

// --------------------------------------------------------------------------
// Schema matching

enum class FieldType { String, Integer, Real, Boolean, Categorical };

inline const char* to_string(FieldType t) {
  switch (t) {
    case FieldType::String: return "string";
    case FieldType::Integer: return "integer";
    case FieldType::Real: return "real";
    case FieldType::Boolean: return "boolean";
    case FieldType::Categorical: return "categorical";
  }
  return "unknown";
}

inline std::optional<FieldType> field_type_from(std::string_view s) {
  if (s == "string") return FieldType::String;
  if (s == "integer") return FieldType::Integer;
  if (s == "real") return FieldType::Real;
  if (s == "boolean") return FieldType::Boolean;
  if (s == "categorical") return FieldType::Categorical;
  return std::nullopt;
}

struct SchemaField {
  std::string name;
  FieldType declared_type = FieldType::String;
  std::vector<std::string> values;  // category values, when declared
  bool operator==(const SchemaField&) const = default;
};

struct SchemaDescriptor {
  std::string dataset_id;
  std::vector<SchemaField> fields;
  bool structured = true;
  bool operator==(const SchemaDescriptor&) const = default;
};

inline SchemaDescriptor schema_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::MalformedDocument, "schema must be a JSON object");
  SchemaDescriptor s;
  if (auto it = j.find("dataset_id"); it != j.end() && it->is_string()) {
    s.dataset_id = it->get<std::string>();
  }
  if (auto it = j.find("structured"); it != j.end() && it->is_boolean()) {
    s.structured = it->get<bool>();
  }
  auto fields = j.find("fields");
  if (fields == j.end() || !fields->is_array()) {
    throw Error(Errc::MalformedDocument, "schema: missing \"fields\" array");
  }
  std::set<std::string> seen;
  for (const auto& f : *fields) {
    SchemaField field;
    if (f.is_string()) {
      field.name = f.get<std::string>();
    } else if (f.is_object()) {
      if (!f.contains("name") || !f["name"].is_string()) {
        throw Error(Errc::MalformedDocument, "schema field: missing \"name\"");
      }
      field.name = f["name"].get<std::string>();
      if (auto t = f.find("type"); t != f.end() && t->is_string()) {
        auto parsed = field_type_from(t->get<std::string>());
        if (!parsed) {
          throw Error(Errc::MalformedDocument, "schema field: unknown type", field.name);
        }
        field.declared_type = *parsed;
      }
      if (auto v = f.find("values"); v != f.end() && v->is_array()) {
        for (const auto& value : *v) field.values.push_back(value.get<std::string>());
      }
    } else {
      throw Error(Errc::MalformedDocument, "schema fields must be strings or objects");
    }
    if (!seen.insert(normalize_term(field.name)).second) {
      throw Error(Errc::InvariantViolation, "schema field names must be unique after normalization",
                  field.name);
    }
    s.fields.push_back(std::move(field));
  }
  return s;
}

struct MappingEntry {
  std::string policy_id;
  std::string attribute_concept;
  std::string schema_field;
  ResolutionKind kind = ResolutionKind::Exact;
  double confidence = 1.0;
  bool operator==(const MappingEntry&) const = default;
};

struct UnmappedAttribute {
  std::string policy_id;
  std::string attribute_concept;
  bool operator==(const UnmappedAttribute&) const = default;
};

struct MappingReport {
  std::vector<MappingEntry> entries;
  std::vector<UnmappedAttribute> unmapped;
  bool operator==(const MappingReport&) const = default;
};

namespace detail {

// Shortest hop count between two concepts; `synonyms_only` restricts the walk.
inline std::optional<int> graph_distance(const ConceptGraph& g,
                                         const std::string& from,
                                         const std::string& to,
                                         bool synonyms_only) {
  if (!g.has_concept(from) || !g.has_concept(to)) return std::nullopt;
  if (from == to) return 0;
  std::map<std::string, int> dist{{from, 0}};
  std::deque<std::string> queue{from};
  while (!queue.empty()) {
    std::string node = queue.front();
    queue.pop_front();
    int d = dist[node];
    auto expand = [&](const std::map<std::string, std::set<std::string>>& adj) {
      auto it = adj.find(node);
      if (it == adj.end()) return false;
      for (const auto& next : it->second) {
        if (dist.count(next)) continue;
        if (next == to) {
          dist[next] = d + 1;
          return true;
        }
        dist[next] = d + 1;
        queue.push_back(next);
      }
      return false;
    };
    if (expand(g.synonym_adjacent)) return d + 1;
    if (!synonyms_only && expand(g.hypernym_adjacent)) return d + 1;
  }
  auto it = dist.find(to);
  if (it == dist.end()) return std::nullopt;
  return it->second;
}

// Field name -> nearest concept node. A surface-form hop costs one step.
struct FieldNode {
  std::string concept_id;
  int surface_cost = 0;
};

inline std::optional<FieldNode> field_node(const ConceptGraph& g,
                                           const std::string& field_name) {
  std::string normalized = normalize_term(field_name);
  std::vector<std::string> candidates{normalized};
  if (!normalized.empty() && normalized.back() == 's') {
    candidates.push_back(normalized.substr(0, normalized.size() - 1));
  }
  for (const auto& candidate : candidates) {
    if (g.has_concept(candidate)) return FieldNode{candidate, 0};
  }
  for (const auto& candidate : candidates) {
    auto it = g.surface_forms.find(candidate);
    if (it != g.surface_forms.end()) return FieldNode{it->second, 1};
  }
  return std::nullopt;
}

}  // namespace detail

// For every (policy, attribute) pair, lists every schema field resolving to
// the same concept. Exact = 1.0, Normalized = 0.9, otherwise 1/(1+d) over the
// shortest synonym/hypernym path. Entries are sorted for determinism.
inline MappingReport map_policy_entities(const PolicySet& set,
                                         const SchemaDescriptor& schema,
                                         const ConceptGraph& graph) {
  MappingReport report;
  for (const auto& policy : set.policies) {
    for (const auto& attribute : policy.attributes) {
      std::vector<MappingEntry> matches;
      for (const auto& field : schema.fields) {
        std::string normalized = normalize_term(field.name);
        std::string singular =
            (!normalized.empty() && normalized.back() == 's')
                ? normalized.substr(0, normalized.size() - 1)
                : normalized;
        if (field.name == attribute) {
          matches.push_back({policy.id, attribute, field.name,
                             ResolutionKind::Exact, 1.0});
          continue;
        }
        if (normalized == attribute || singular == attribute) {
          matches.push_back({policy.id, attribute, field.name,
                             ResolutionKind::Normalized, 0.9});
          continue;
        }
        auto node = detail::field_node(graph, field.name);
        if (!node) continue;
        auto any_path =
            detail::graph_distance(graph, node->concept_id, attribute, false);
        if (!any_path) continue;
        int d = node->surface_cost + *any_path;
        if (d < 1) continue;  // same node without a name match is unreachable here
        auto synonym_path =
            detail::graph_distance(graph, node->concept_id, attribute, true);
        ResolutionKind kind =
            (synonym_path && node->surface_cost + *synonym_path == d)
                ? ResolutionKind::Synonym
                : ResolutionKind::Hypernym;
        matches.push_back(
            {policy.id, attribute, field.name, kind, 1.0 / (1.0 + d)});
      }
      if (matches.empty()) {
        report.unmapped.push_back({policy.id, attribute});
      } else {
        report.entries.insert(report.entries.end(), matches.begin(),
                              matches.end());
      }
    }
  }
  std::sort(report.entries.begin(), report.entries.end(),
            [](const MappingEntry& a, const MappingEntry& b) {
              return std::tie(a.policy_id, a.attribute_concept, a.schema_field) <
                     std::tie(b.policy_id, b.attribute_concept, b.schema_field);
            });
  return report;
}

inline json mapping_report_to_json(const MappingReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"policy_id", e.policy_id},
                       {"attribute", e.attribute_concept},
                       {"schema_field", e.schema_field},
                       {"kind", to_string(e.kind)},
                       {"confidence", e.confidence}});
  }
  json unmapped = json::array();
  for (const auto& u : report.unmapped) {
    unmapped.push_back({{"policy_id", u.policy_id}, {"attribute", u.attribute_concept}});
  }
  return json{{"entries", entries}, {"unmapped", unmapped}};
}

inline MappingReport mapping_report_from_json(const json& j) {
  MappingReport report;
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
    throw Error(Errc::MalformedDocument, "mapping report: missing \"entries\"");
  }
  for (const auto& e : j["entries"]) {
    MappingEntry entry;
    entry.policy_id = e.at("policy_id").get<std::string>();
    entry.attribute_concept = e.at("attribute").get<std::string>();
    entry.schema_field = e.at("schema_field").get<std::string>();
    std::string kind = e.at("kind").get<std::string>();
    if (kind == "exact") {
      entry.kind = ResolutionKind::Exact;
    } else if (kind == "normalized") {
      entry.kind = ResolutionKind::Normalized;
    } else if (kind == "synonym") {
      entry.kind = ResolutionKind::Synonym;
    } else if (kind == "hypernym") {
      entry.kind = ResolutionKind::Hypernym;
    } else {
      throw Error(Errc::MalformedDocument, "mapping report: unknown kind", kind);
    }
    entry.confidence = e.at("confidence").get<double>();
    report.entries.push_back(std::move(entry));
  }
  if (auto it = j.find("unmapped"); it != j.end() && it->is_array()) {
    for (const auto& u : *it) {
      report.unmapped.push_back({u.at("policy_id").get<std::string>(),
                                 u.at("attribute").get<std::string>()});
    }
  }
  return report;
}

}  // namespace fairgate

#pragma once

// PolicySet parsing and serialization. JSON output is canonical (sorted keys,
// no whitespace) and doubles as the hashing form; the XML form mirrors the
// same schema for interoperability.

#include <cstdlib>
#include <string>
#include <string_view>

#include "fairgate/policy.hpp"
#include "fairgate/xml.hpp"

namespace fairgate {

enum class Format { Json, Xml };

namespace detail {

[[noreturn]] inline void malformed(const std::string& why) {
  throw Error(Errc::MalformedDocument, why);
}

inline const json& require_field(const json& j, const char* key,
                                 const char* context) {
  auto it = j.find(key);
  if (it == j.end()) {
    malformed(std::string(context) + ": missing \"" + key + "\"");
  }
  return *it;
}

inline std::string require_string(const json& j, const char* key,
                                  const char* context) {
  const json& v = require_field(j, key, context);
  if (!v.is_string()) {
    malformed(std::string(context) + ": \"" + key + "\" must be a string");
  }
  return v.get<std::string>();
}

inline double parse_double_text(const std::string& s, const char* context) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size() || s.empty()) {
    malformed(std::string(context) + ": bad number \"" + s + "\"");
  }
  return v;
}

inline std::int64_t parse_int_text(const std::string& s, const char* context) {
  try {
    size_t used = 0;
    std::int64_t v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    malformed(std::string(context) + ": bad integer \"" + s + "\"");
  }
}

inline void throw_first_violation(const PolicySet& set) {
  auto violations = validate_policy_set(set);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw Error(Errc::InvariantViolation, v.invariant + ": " + v.detail,
                v.policy_id);
  }
}

}  // namespace detail

// --------------------------------------------------------------------------
// JSON form

inline json fairness_constraint_to_json(const FairnessConstraint& fc) {
  json metrics = json::array();
  for (Metric m : fc.metrics) metrics.push_back(to_string(m));
  json thresholds = json::object();
  for (const auto& [m, t] : fc.thresholds) thresholds[to_string(m)] = t;
  json out{{"metrics", metrics}, {"thresholds", thresholds}};
  if (!fc.privileged_values.empty()) {
    out["privileged_values"] = fc.privileged_values;
  }
  return out;
}

inline json policy_to_json(const Policy& p) {
  json out{{"id", p.id},
           {"kind", to_string(p.kind)},
           {"effect", to_string(p.effect)},
           {"attributes", p.attributes},
           {"provenance",
            {{"source_document", p.provenance.source_document},
             {"sentence_index", p.provenance.sentence_index},
             {"sentence_text", p.provenance.sentence_text},
             {"extraction_confidence", p.provenance.extraction_confidence}}}};
  if (p.target_dataset) out["target_dataset"] = *p.target_dataset;
  if (p.fairness_constraint) {
    out["fairness_constraint"] = fairness_constraint_to_json(*p.fairness_constraint);
  }
  json scope = json::object();
  if (p.scope.time_window) {
    scope["time_window"] = {{"start", p.scope.time_window->start},
                            {"end", p.scope.time_window->end}};
  }
  if (p.scope.jurisdiction) scope["jurisdiction"] = *p.scope.jurisdiction;
  if (!scope.empty()) out["scope"] = scope;
  return out;
}

inline json policy_set_to_json(const PolicySet& set) {
  json policies = json::array();
  for (const auto& p : set.policies) policies.push_back(policy_to_json(p));
  return json{{"schema_version", set.schema_version},
              {"source_digest", set.source_digest},
              {"policies", policies}};
}

inline FairnessConstraint fairness_constraint_from_json(const json& j) {
  using detail::malformed;
  FairnessConstraint fc;
  const json& metrics = detail::require_field(j, "metrics", "fairness_constraint");
  if (!metrics.is_array()) malformed("fairness_constraint: \"metrics\" must be an array");
  for (const auto& m : metrics) {
    if (!m.is_string()) malformed("fairness_constraint: metric names must be strings");
    auto parsed = metric_from(m.get<std::string>());
    if (!parsed) malformed("fairness_constraint: unknown metric \"" + m.get<std::string>() + "\"");
    fc.metrics.insert(*parsed);
  }
  if (auto it = j.find("thresholds"); it != j.end()) {
    if (!it->is_object()) malformed("fairness_constraint: \"thresholds\" must be an object");
    for (const auto& [key, value] : it->items()) {
      auto parsed = metric_from(key);
      if (!parsed) malformed("fairness_constraint: unknown threshold metric \"" + key + "\"");
      if (!value.is_number()) malformed("fairness_constraint: thresholds must be numbers");
      fc.thresholds[*parsed] = value.get<double>();
    }
  }
  if (auto it = j.find("privileged_values"); it != j.end()) {
    if (!it->is_object()) malformed("fairness_constraint: \"privileged_values\" must be an object");
    for (const auto& [key, value] : it->items()) {
      if (!value.is_string()) malformed("fairness_constraint: privileged values must be strings");
      fc.privileged_values[key] = value.get<std::string>();
    }
  }
  return fc;
}

inline Policy policy_from_json(const json& j) {
  using detail::malformed;
  if (!j.is_object()) malformed("policy must be an object");
  Policy p;
  p.id = detail::require_string(j, "id", "policy");
  auto kind = policy_kind_from(detail::require_string(j, "kind", "policy"));
  if (!kind) malformed("policy: unknown kind");
  p.kind = *kind;
  auto effect = effect_from(detail::require_string(j, "effect", "policy"));
  if (!effect) malformed("policy: unknown effect");
  p.effect = *effect;
  const json& attrs = detail::require_field(j, "attributes", "policy");
  if (!attrs.is_array()) malformed("policy: \"attributes\" must be an array");
  std::vector<std::string> raw;
  for (const auto& a : attrs) {
    if (!a.is_string()) malformed("policy: attributes must be strings");
    raw.push_back(a.get<std::string>());
  }
  p.attributes = normalize_attributes(raw);
  if (auto it = j.find("target_dataset"); it != j.end()) {
    if (!it->is_string()) malformed("policy: \"target_dataset\" must be a string");
    p.target_dataset = it->get<std::string>();
  }
  if (auto it = j.find("fairness_constraint"); it != j.end()) {
    p.fairness_constraint = fairness_constraint_from_json(*it);
  }
  if (auto it = j.find("scope"); it != j.end()) {
    if (!it->is_object()) malformed("policy: \"scope\" must be an object");
    if (auto tw = it->find("time_window"); tw != it->end()) {
      p.scope.time_window = TimeWindow{
          detail::require_string(*tw, "start", "time_window"),
          detail::require_string(*tw, "end", "time_window")};
    }
    if (auto ju = it->find("jurisdiction"); ju != it->end()) {
      if (!ju->is_string()) malformed("scope: \"jurisdiction\" must be a string");
      p.scope.jurisdiction = ju->get<std::string>();
    }
  }
  const json& prov = detail::require_field(j, "provenance", "policy");
  if (!prov.is_object()) malformed("policy: \"provenance\" must be an object");
  p.provenance.source_document =
      detail::require_string(prov, "source_document", "provenance");
  const json& idx = detail::require_field(prov, "sentence_index", "provenance");
  if (!idx.is_number_integer()) malformed("provenance: \"sentence_index\" must be an integer");
  p.provenance.sentence_index = idx.get<std::int64_t>();
  p.provenance.sentence_text =
      detail::require_string(prov, "sentence_text", "provenance");
  const json& conf =
      detail::require_field(prov, "extraction_confidence", "provenance");
  if (!conf.is_number()) malformed("provenance: \"extraction_confidence\" must be a number");
  p.provenance.extraction_confidence = conf.get<double>();
  return p;
}

inline PolicySet policy_set_from_json(const json& j) {
  using detail::malformed;
  if (!j.is_object()) malformed("policy set must be an object");
  PolicySet set;
  set.schema_version = detail::require_string(j, "schema_version", "policy_set");
  set.source_digest = detail::require_string(j, "source_digest", "policy_set");
  const json& policies = detail::require_field(j, "policies", "policy_set");
  if (!policies.is_array()) malformed("policy_set: \"policies\" must be an array");
  for (const auto& pj : policies) set.policies.push_back(policy_from_json(pj));
  detail::throw_first_violation(set);
  return set;
}

// --------------------------------------------------------------------------
// XML form

inline xml::Element policy_to_xml(const Policy& p) {
  xml::Element e{"Policy"};
  e.attributes = {{"id", p.id},
                  {"kind", to_string(p.kind)},
                  {"effect", to_string(p.effect)}};
  if (p.target_dataset) {
    xml::Element t{"TargetDataset"};
    t.text = *p.target_dataset;
    e.children.push_back(std::move(t));
  }
  xml::Element attrs{"Attributes"};
  for (const auto& a : p.attributes) {
    xml::Element attr{"Attribute"};
    attr.text = a;
    attrs.children.push_back(std::move(attr));
  }
  e.children.push_back(std::move(attrs));
  if (p.fairness_constraint) {
    xml::Element fc{"FairnessConstraint"};
    for (Metric m : p.fairness_constraint->metrics) {
      xml::Element metric{"Metric"};
      metric.attributes = {{"name", to_string(m)}};
      fc.children.push_back(std::move(metric));
    }
    for (const auto& [m, t] : p.fairness_constraint->thresholds) {
      xml::Element threshold{"Threshold"};
      threshold.attributes = {{"metric", to_string(m)},
                              {"value", format_double(t)}};
      fc.children.push_back(std::move(threshold));
    }
    for (const auto& [attr, value] : p.fairness_constraint->privileged_values) {
      xml::Element pv{"PrivilegedValue"};
      pv.attributes = {{"attribute", attr}, {"value", value}};
      fc.children.push_back(std::move(pv));
    }
    e.children.push_back(std::move(fc));
  }
  if (p.scope.time_window || p.scope.jurisdiction) {
    xml::Element scope{"Scope"};
    if (p.scope.time_window) {
      xml::Element tw{"TimeWindow"};
      tw.attributes = {{"start", p.scope.time_window->start},
                       {"end", p.scope.time_window->end}};
      scope.children.push_back(std::move(tw));
    }
    if (p.scope.jurisdiction) {
      xml::Element ju{"Jurisdiction"};
      ju.text = *p.scope.jurisdiction;
      scope.children.push_back(std::move(ju));
    }
    e.children.push_back(std::move(scope));
  }
  xml::Element prov{"Provenance"};
  prov.attributes = {
      {"source_document", p.provenance.source_document},
      {"sentence_index", std::to_string(p.provenance.sentence_index)},
      {"extraction_confidence",
       format_double(p.provenance.extraction_confidence)}};
  xml::Element sentence{"SentenceText"};
  sentence.text = p.provenance.sentence_text;
  prov.children.push_back(std::move(sentence));
  e.children.push_back(std::move(prov));
  return e;
}

inline xml::Element policy_set_to_xml(const PolicySet& set) {
  xml::Element root{"PolicySet"};
  root.attributes = {{"schema_version", set.schema_version},
                     {"source_digest", set.source_digest}};
  for (const auto& p : set.policies) root.children.push_back(policy_to_xml(p));
  return root;
}

inline Policy policy_from_xml(const xml::Element& e) {
  using detail::malformed;
  auto attr_or_fail = [&](const xml::Element& el, const char* key) {
    const std::string* v = el.attr(key);
    if (!v) malformed(std::string("<") + el.name + ">: missing attribute \"" + key + "\"");
    return *v;
  };
  Policy p;
  p.id = attr_or_fail(e, "id");
  auto kind = policy_kind_from(attr_or_fail(e, "kind"));
  if (!kind) malformed("<Policy>: unknown kind");
  p.kind = *kind;
  auto effect = effect_from(attr_or_fail(e, "effect"));
  if (!effect) malformed("<Policy>: unknown effect");
  p.effect = *effect;
  if (const xml::Element* t = e.child("TargetDataset")) p.target_dataset = t->text;
  const xml::Element* attrs = e.child("Attributes");
  if (!attrs) malformed("<Policy>: missing <Attributes>");
  std::vector<std::string> raw;
  for (const xml::Element* a : attrs->children_named("Attribute")) {
    raw.push_back(a->text);
  }
  p.attributes = normalize_attributes(raw);
  if (const xml::Element* fc = e.child("FairnessConstraint")) {
    FairnessConstraint constraint;
    for (const xml::Element* m : fc->children_named("Metric")) {
      auto metric = metric_from(attr_or_fail(*m, "name"));
      if (!metric) malformed("<Metric>: unknown name");
      constraint.metrics.insert(*metric);
    }
    for (const xml::Element* t : fc->children_named("Threshold")) {
      auto metric = metric_from(attr_or_fail(*t, "metric"));
      if (!metric) malformed("<Threshold>: unknown metric");
      constraint.thresholds[*metric] =
          detail::parse_double_text(attr_or_fail(*t, "value"), "<Threshold>");
    }
    for (const xml::Element* pv : fc->children_named("PrivilegedValue")) {
      constraint.privileged_values[attr_or_fail(*pv, "attribute")] =
          attr_or_fail(*pv, "value");
    }
    p.fairness_constraint = std::move(constraint);
  }
  if (const xml::Element* scope = e.child("Scope")) {
    if (const xml::Element* tw = scope->child("TimeWindow")) {
      p.scope.time_window =
          TimeWindow{attr_or_fail(*tw, "start"), attr_or_fail(*tw, "end")};
    }
    if (const xml::Element* ju = scope->child("Jurisdiction")) {
      p.scope.jurisdiction = ju->text;
    }
  }
  const xml::Element* prov = e.child("Provenance");
  if (!prov) malformed("<Policy>: missing <Provenance>");
  p.provenance.source_document = attr_or_fail(*prov, "source_document");
  p.provenance.sentence_index = detail::parse_int_text(
      attr_or_fail(*prov, "sentence_index"), "<Provenance>");
  p.provenance.extraction_confidence = detail::parse_double_text(
      attr_or_fail(*prov, "extraction_confidence"), "<Provenance>");
  const xml::Element* sentence = prov->child("SentenceText");
  if (!sentence) malformed("<Provenance>: missing <SentenceText>");
  p.provenance.sentence_text = sentence->text;
  return p;
}

inline PolicySet policy_set_from_xml(const xml::Element& root) {
  using detail::malformed;
  if (root.name != "PolicySet") malformed("root element must be <PolicySet>");
  PolicySet set;
  const std::string* version = root.attr("schema_version");
  const std::string* digest = root.attr("source_digest");
  if (!version || !digest) {
    malformed("<PolicySet>: missing schema_version/source_digest");
  }
  set.schema_version = *version;
  set.source_digest = *digest;
  for (const xml::Element* p : root.children_named("Policy")) {
    set.policies.push_back(policy_from_xml(*p));
  }
  detail::throw_first_violation(set);
  return set;
}

// --------------------------------------------------------------------------
// Entry points

inline std::string serialize_policy_set(const PolicySet& set, Format format) {
  if (format == Format::Json) return canonical_dump(policy_set_to_json(set));
  return xml::write_document(policy_set_to_xml(set));
}

inline PolicySet parse_policy_set(std::string_view data, Format format) {
  if (format == Format::Json) {
    json j;
    try {
      j = json::parse(data);
    } catch (const json::parse_error& e) {
      throw Error(Errc::MalformedDocument, e.what(), "", std::nullopt,
                  e.byte);
    }
    return policy_set_from_json(j);
  }
  return policy_set_from_xml(xml::parse_document(data));
}

}  // namespace fairgate

// Concept graph, term resolution, entity mapping and policy extraction.

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace fairgate;

#ifndef FAIRGATE_DATA_DIR
#error "FAIRGATE_DATA_DIR must point at the shipped data files"
#endif

static std::string data_file(const char* name) {
  return testsupport::slurp(std::filesystem::path(FAIRGATE_DATA_DIR) / name);
}

static ConceptGraph shipped_graph() {
  return load_concept_graph(data_file("concept_graph.json"));
}

static TriggerLexicon shipped_lexicon() {
  return load_lexicon(data_file("lexicon.json"));
}

TEST_CASE("normalize_term collapses case, punctuation and runs of spaces") {
  CHECK(normalize_term("  Zip   Code ") == "zip code");
  CHECK(normalize_term("ZIP-code") == "zip code");
  CHECK(normalize_term("National_Origin") == "national origin");
  CHECK(normalize_term("...") == "");
}

TEST_CASE("graph loader rejects bad documents") {
  CHECK_THROWS_MATCHES(load_concept_graph("{"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::MalformedGraph;
                       }));
  CHECK_THROWS_MATCHES(load_concept_graph(R"({"synonyms":[]})"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::MalformedGraph;
                       }));
  CHECK_THROWS_MATCHES(
      load_concept_graph(R"({"concepts":["a"],"synonyms":[["a","ghost"]]})"),
      Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.code() == Errc::DanglingEdge && e.subject() == "ghost";
      }));
  CHECK_THROWS_MATCHES(
      load_concept_graph(
          R"({"concepts":["a","b"],"hypernyms":[["a","b"],["b","a"]]})"),
      Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.code() == Errc::HypernymCycle;
      }));
}

TEST_CASE("resolve_term distinguishes exact, normalized and synonym hits") {
  ConceptGraph g = shipped_graph();
  auto r = resolve_term("gender", g);
  REQUIRE(r);
  CHECK(*r == Resolution{"gender", ResolutionKind::Exact});

  r = resolve_term("Gender", g);
  REQUIRE(r);
  CHECK(*r == Resolution{"gender", ResolutionKind::Normalized});

  r = resolve_term("genders", g);
  REQUIRE(r);
  CHECK(*r == Resolution{"gender", ResolutionKind::Normalized});

  r = resolve_term("sex", g);
  REQUIRE(r);
  CHECK(*r == Resolution{"gender", ResolutionKind::Synonym});

  r = resolve_term("ethnicity", g);
  REQUIRE(r);
  CHECK(*r == Resolution{"race", ResolutionKind::Synonym});

  r = resolve_term("zip code", g);
  REQUIRE(r);
  CHECK(*r == Resolution{"zip", ResolutionKind::Synonym});

  r = resolve_term("National Origin", g);
  REQUIRE(r);
  CHECK(*r == Resolution{"nationality", ResolutionKind::Synonym});

  CHECK_FALSE(resolve_term("caste", g));
  CHECK_FALSE(resolve_term("", g));
}

TEST_CASE("bare concepts canonicalize through one synonym hop") {
  // "b" is a concept without a surface form; its neighbour "a" is canonical.
  ConceptGraph g = load_concept_graph(
      R"({"concepts":["a","b"],"synonyms":[["a","b"]],
          "surface_forms":{"a":"a"}})");
  auto r = resolve_term("b", g);
  REQUIRE(r);
  CHECK(*r == Resolution{"a", ResolutionKind::Synonym});
}

static PolicySet one_attribute_set(const std::string& attribute) {
  Policy p;
  p.id = "p0";
  p.kind = PolicyKind::AccessControl;
  p.effect = Effect::DenyUse;
  p.attributes = {attribute};
  p.provenance.source_document = "t";
  p.provenance.sentence_text = "t";
  PolicySet set;
  set.source_digest = sha256_hex("t");
  set.policies = {p};
  return set;
}

static SchemaDescriptor fields_schema(std::vector<std::string> names) {
  SchemaDescriptor s;
  s.dataset_id = "d";
  for (auto& n : names) s.fields.push_back({n, FieldType::String, {}});
  return s;
}

TEST_CASE("mapping confidence follows 1/(1+d) over the concept graph") {
  ConceptGraph g = shipped_graph();

  auto entry_for = [&](const std::string& attribute, const std::string& field)
      -> std::optional<MappingEntry> {
    auto report = map_policy_entities(one_attribute_set(attribute),
                                      fields_schema({field}), g);
    if (report.entries.empty()) return std::nullopt;
    return report.entries.front();
  };

  auto e = entry_for("gender", "gender");
  REQUIRE(e);
  CHECK(e->kind == ResolutionKind::Exact);
  CHECK(e->confidence == 1.0);

  e = entry_for("gender", "Gender");
  REQUIRE(e);
  CHECK(e->kind == ResolutionKind::Normalized);
  CHECK(e->confidence == 0.9);

  e = entry_for("gender", "sex");  // one synonym hop
  REQUIRE(e);
  CHECK(e->kind == ResolutionKind::Synonym);
  CHECK(e->confidence == 0.5);

  e = entry_for("race", "ethnicity");
  REQUIRE(e);
  CHECK(e->kind == ResolutionKind::Synonym);
  CHECK(e->confidence == 0.5);

  e = entry_for("location", "zip");  // one hypernym hop
  REQUIRE(e);
  CHECK(e->kind == ResolutionKind::Hypernym);
  CHECK(e->confidence == 0.5);

  // surface form hop costs one extra step: zip_code -> zip -> location
  e = entry_for("location", "zip_code");
  REQUIRE(e);
  CHECK(e->kind == ResolutionKind::Hypernym);
  CHECK(e->confidence == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK_FALSE(entry_for("age", "income"));
}

TEST_CASE("unmappable attributes land in the unmapped list") {
  ConceptGraph g = shipped_graph();
  auto report = map_policy_entities(one_attribute_set("age"),
                                    fields_schema({"income", "label"}), g);
  CHECK(report.entries.empty());
  REQUIRE(report.unmapped.size() == 1);
  CHECK(report.unmapped[0] == UnmappedAttribute{"p0", "age"});
}

TEST_CASE("mapping entries are sorted and the report round-trips") {
  ConceptGraph g = shipped_graph();
  PolicySet set = one_attribute_set("gender");
  set.policies[0].attributes = {"race", "gender"};
  auto report =
      map_policy_entities(set, fields_schema({"sex", "ethnicity", "gender"}), g);
  REQUIRE(report.entries.size() == 3);
  CHECK(report.entries[0].attribute_concept == "gender");
  CHECK(report.entries[0].schema_field == "gender");
  CHECK(report.entries[1].attribute_concept == "gender");
  CHECK(report.entries[1].schema_field == "sex");
  CHECK(report.entries[2].attribute_concept == "race");
  CHECK(report.entries[2].schema_field == "ethnicity");
  CHECK(mapping_report_from_json(mapping_report_to_json(report)) == report);
}

TEST_CASE("sentence segmentation splits on terminators, not abbreviations") {
  auto sentences = segment_sentences(
      "ML systems should not use gender information from the dataset for "
      "decision making. Systems using this dataset should not be biased in "
      "decision making with respect to gender and race.");
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0].index == 0);
  CHECK(sentences[1].index == 1);
  CHECK(sentences[1].text ==
        "Systems using this dataset should not be biased in decision making "
        "with respect to gender and race.");

  sentences = segment_sentences("Use e.g. gender. Done.");
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0].text == "Use e.g. gender.");
  CHECK(sentences[1].text == "Done.");

  sentences = segment_sentences("Is it fair? It must be! No exceptions.");
  REQUIRE(sentences.size() == 3);

  CHECK(segment_sentences("").empty());
  CHECK(segment_sentences("   ").empty());
}

TEST_CASE("concept mentions are leftmost-longest") {
  ConceptGraph g = shipped_graph();
  auto mentions =
      extract_concept_mentions("The zip code and gender columns.", g);
  REQUIRE(mentions.size() == 2);
  CHECK(mentions[0].mention_text == "zip code");  // longest, not bare "zip"
  CHECK(mentions[0].concept_id == "zip");
  CHECK(mentions[1].mention_text == "gender");
  CHECK(mentions[1].concept_id == "gender");
}

TEST_CASE("extraction of the two-sentence policy document") {
  ConceptGraph g = shipped_graph();
  TriggerLexicon lexicon = shipped_lexicon();
  std::string doc = data_file("policies.txt");
  auto result = extract_policies(doc, lexicon, g, "policies.txt");

  CHECK(result.policies.source_digest == sha256_hex(doc));
  CHECK(result.unresolved.empty());
  REQUIRE(result.policies.policies.size() == 2);

  const Policy& deny = result.policies.policies[0];
  CHECK(deny.id == "p0-access");
  CHECK(deny.kind == PolicyKind::AccessControl);
  CHECK(deny.effect == Effect::DenyUse);
  CHECK(deny.attributes == std::vector<std::string>{"gender"});
  CHECK(deny.provenance.sentence_index == 0);
  CHECK(deny.provenance.extraction_confidence == 1.0);
  CHECK_FALSE(deny.fairness_constraint);

  const Policy& fair = result.policies.policies[1];
  CHECK(fair.id == "p1-fair");
  CHECK(fair.kind == PolicyKind::Fairness);
  CHECK(fair.effect == Effect::RequireFairness);
  CHECK(fair.attributes == std::vector<std::string>{"gender", "race"});
  REQUIRE(fair.fairness_constraint);
  CHECK(fair.fairness_constraint->metrics ==
        std::set<Metric>{Metric::OutputDeviation, Metric::DisparateImpact,
                         Metric::DisparateMistreatment});
  CHECK(fair.fairness_constraint->threshold_for(Metric::DisparateImpact) == 0.8);
  CHECK(fair.provenance.extraction_confidence == 1.0);

  CHECK(validate_policy_set(result.policies).empty());
}

TEST_CASE("synonym resolution lowers extraction confidence to 0.8") {
  ConceptGraph g = shipped_graph();
  TriggerLexicon lexicon = shipped_lexicon();
  auto result = extract_policies(
      "Systems must not be biased with respect to ethnicity.", lexicon, g);
  REQUIRE(result.policies.policies.size() == 1);
  CHECK(result.policies.policies[0].attributes ==
        std::vector<std::string>{"race"});
  CHECK(result.policies.policies[0].provenance.extraction_confidence == 0.8);
}

TEST_CASE("wildcard triggers match exactly one token") {
  ConceptGraph g = shipped_graph();
  TriggerLexicon lexicon = shipped_lexicon();
  auto result = extract_policies(
      "COMPAS assessments take gender into account.", lexicon, g);
  REQUIRE(result.policies.policies.size() == 1);
  CHECK(result.policies.policies[0].kind == PolicyKind::AccessControl);
  CHECK(result.policies.policies[0].attributes ==
        std::vector<std::string>{"gender"});

  // two tokens between "take" and "into" defeat the single-token wildcard
  result = extract_policies("They take the protected attribute into account.",
                            lexicon, g);
  CHECK(result.policies.policies.empty());
}

TEST_CASE("trigger sentences without resolvable concepts become unresolved") {
  ConceptGraph g = shipped_graph();
  TriggerLexicon lexicon = shipped_lexicon();
  auto result = extract_policies("Systems should not use caste information.",
                                 lexicon, g);
  CHECK(result.policies.policies.empty());
  REQUIRE(result.unresolved.size() == 1);
  CHECK(result.unresolved[0].sentence_index == 0);
  CHECK(result.unresolved[0].mention_text == "caste");
  CHECK(result.unresolved[0].reason == "unknown concept");
}

TEST_CASE("removing a concept moves its sentences to unresolved") {
  // With no "gender" anywhere in the graph the deny sentence has zero
  // resolvable mentions and must surface for manual review.
  ConceptGraph g = load_concept_graph(R"({"concepts":["race"],
      "surface_forms":{"race":"race"}})");
  TriggerLexicon lexicon = shipped_lexicon();
  auto result = extract_policies(
      "ML systems should not use gender information from the dataset for "
      "decision making.",
      lexicon, g);
  CHECK(result.policies.policies.empty());
  REQUIRE(result.unresolved.size() == 1);
  CHECK(result.unresolved[0].mention_text == "gender");
}

TEST_CASE("non-trigger sentences never produce policies") {
  ConceptGraph g = shipped_graph();
  TriggerLexicon lexicon = shipped_lexicon();
  auto result = extract_policies(
      "The dataset contains gender and race columns for reporting.", lexicon, g);
  CHECK(result.policies.policies.empty());
  CHECK(result.unresolved.empty());
  CHECK(result.stats.sentences_total == 1);
  CHECK(result.stats.sentences_matched == 0);
}

TEST_CASE("corpus extraction matches the expected record set exactly") {
  ConceptGraph g = shipped_graph();
  TriggerLexicon lexicon = shipped_lexicon();
  auto result = extract_policies(data_file("corpus.txt"), lexicon, g, "corpus.txt");

  json expected = json::parse(data_file("corpus_expected.json"));
  std::set<std::string> want;
  for (const auto& record : expected) {
    want.insert(canonical_dump(record));
  }
  std::set<std::string> got;
  for (const auto& p : result.policies.policies) {
    got.insert(canonical_dump(
        json{{"sentence_index", p.provenance.sentence_index},
             {"kind", to_string(p.kind)},
             {"attributes", p.attributes}}));
  }
  CHECK(got == want);
  CHECK(result.unresolved.empty());
  CHECK(result.stats.sentences_total == 20);
  CHECK(result.stats.sentences_matched == 10);
  CHECK(validate_policy_set(result.policies).empty());
}

TEST_CASE("lexicon loader validates shape") {
  CHECK_THROWS_MATCHES(load_lexicon("[]"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::MalformedDocument;
                       }));
  CHECK_THROWS_MATCHES(
      load_lexicon(R"({"version":"1","deny_triggers":["Should Not Use"],
                       "fairness_triggers":[]})"),
      Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.code() == Errc::InvariantViolation;
      }));
}

#pragma once

// Rule-based policy extraction: sentence segmentation, trigger-lexicon
// matching and concept-mention resolution. Deliberately not NLU; every
// decision here is reproducible from (document, lexicon, graph).

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fairgate/concept_graph.hpp"
#include "fairgate/errors.hpp"
#include "fairgate/policy.hpp"
#include "fairgate/policy_io.hpp"

namespace fairgate {

struct TriggerPattern {
  std::string raw;
  std::vector<std::string> tokens;  // "*" entries match exactly one token
  bool operator==(const TriggerPattern&) const = default;
};

struct TriggerLexicon {
  std::string version;
  std::vector<TriggerPattern> deny_triggers;
  std::vector<TriggerPattern> fairness_triggers;
  bool operator==(const TriggerLexicon&) const = default;
};

namespace detail {

inline std::vector<std::string> pattern_tokens(const std::string& raw) {
  std::vector<std::string> out;
  std::string piece;
  auto flush = [&] {
    if (piece.empty()) return;
    if (piece == "*") {
      out.push_back("*");
    } else {
      std::string normalized = normalize_term(piece);
      std::string token;
      for (char c : normalized) {
        if (c == ' ') {
          if (!token.empty()) out.push_back(token);
          token.clear();
        } else {
          token += c;
        }
      }
      if (!token.empty()) out.push_back(token);
    }
    piece.clear();
  };
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      piece += c;
    }
  }
  flush();
  return out;
}

}  // namespace detail

inline TriggerLexicon load_lexicon(std::string_view data) {
  json j;
  try {
    j = json::parse(data);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedDocument, e.what());
  }
  if (!j.is_object()) throw Error(Errc::MalformedDocument, "lexicon must be a JSON object");
  TriggerLexicon lex;
  if (auto it = j.find("version"); it != j.end() && it->is_string()) {
    lex.version = it->get<std::string>();
  }
  auto read = [&](const char* key, std::vector<TriggerPattern>& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_array()) {
      throw Error(Errc::MalformedDocument, std::string("lexicon: missing \"") + key + "\" array");
    }
    for (const auto& entry : *it) {
      if (!entry.is_string()) {
        throw Error(Errc::MalformedDocument, std::string(key) + " entries must be strings");
      }
      TriggerPattern p;
      p.raw = entry.get<std::string>();
      if (p.raw != lowercase_ascii(p.raw)) {
        throw Error(Errc::InvariantViolation, "trigger patterns must be lowercase", p.raw);
      }
      p.tokens = detail::pattern_tokens(p.raw);
      if (p.tokens.empty()) {
        throw Error(Errc::InvariantViolation, "trigger patterns must be non-empty", p.raw);
      }
      out.push_back(std::move(p));
    }
  };
  read("deny_triggers", lex.deny_triggers);
  read("fairness_triggers", lex.fairness_triggers);
  return lex;
}

// --------------------------------------------------------------------------
// Sentence segmentation

struct Sentence {
  std::size_t index = 0;
  std::size_t start_offset = 0;  // byte offsets into the source text
  std::size_t end_offset = 0;
  std::string text;
  bool operator==(const Sentence&) const = default;
};

namespace detail {

inline const std::set<std::string>& abbreviations() {
  static const std::set<std::string> kList{"e.g.", "i.e.", "etc.", "vs.", "no."};
  return kList;
}

inline bool is_abbreviation_at(const std::string& text, std::size_t dot) {
  // word chunk ending at `dot` (inclusive), delimited by whitespace
  std::size_t begin = dot;
  while (begin > 0 &&
         !std::isspace(static_cast<unsigned char>(text[begin - 1]))) {
    --begin;
  }
  std::string chunk = lowercase_ascii(text.substr(begin, dot - begin + 1));
  return abbreviations().count(chunk) > 0;
}

}  // namespace detail

inline std::vector<Sentence> segment_sentences(const std::string& text) {
  std::vector<Sentence> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t start = i;
    std::size_t end = n;
    for (std::size_t k = start; k < n; ++k) {
      char c = text[k];
      if (c != '.' && c != '?' && c != '!') continue;
      bool at_eos = (k + 1 == n) ||
                    std::isspace(static_cast<unsigned char>(text[k + 1]));
      if (!at_eos) continue;
      if (c == '.' && detail::is_abbreviation_at(text, k)) continue;
      end = k + 1;
      break;
    }
    Sentence s;
    s.index = out.size();
    s.start_offset = start;
    s.end_offset = end;
    s.text = text.substr(start, end - start);
    while (!s.text.empty() &&
           std::isspace(static_cast<unsigned char>(s.text.back()))) {
      --s.end_offset;
      s.text.pop_back();
    }
    out.push_back(std::move(s));
    i = end;
  }
  return out;
}

// --------------------------------------------------------------------------
// Concept mentions

struct ConceptMention {
  std::string mention_text;
  std::string concept_id;
  ResolutionKind resolution = ResolutionKind::Exact;
  std::size_t token_begin = 0;  // token indices within the sentence
  std::size_t token_end = 0;    // exclusive
  bool operator==(const ConceptMention&) const = default;
};

namespace detail {

struct Token {
  std::string text;       // lowercased
  std::string original;   // as written
  std::size_t begin = 0;  // byte offsets within the sentence
  std::size_t end = 0;
};

inline std::vector<Token> tokenize(const std::string& sentence) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    if (!std::isalnum(static_cast<unsigned char>(sentence[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < sentence.size() &&
           std::isalnum(static_cast<unsigned char>(sentence[i]))) {
      ++i;
    }
    Token t;
    t.original = sentence.substr(start, i - start);
    t.text = lowercase_ascii(t.original);
    t.begin = start;
    t.end = i;
    out.push_back(std::move(t));
  }
  return out;
}

inline std::size_t max_surface_span(const ConceptGraph& g) {
  std::size_t span = 1;
  for (const auto& [token, target] : g.surface_forms) {
    span = std::max(span,
                    static_cast<std::size_t>(
                        std::count(token.begin(), token.end(), ' ') + 1));
  }
  return span;
}

}  // namespace detail

// Leftmost-longest scan over token spans; spans never overlap.
inline std::vector<ConceptMention> extract_concept_mentions(
    const std::string& sentence, const ConceptGraph& graph) {
  std::vector<ConceptMention> out;
  auto tokens = detail::tokenize(sentence);
  std::size_t max_span = detail::max_surface_span(graph);
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    std::size_t limit = std::min(max_span, tokens.size() - i);
    for (std::size_t len = limit; len >= 1; --len) {
      std::string raw = sentence.substr(tokens[i].begin,
                                        tokens[i + len - 1].end - tokens[i].begin);
      auto resolution = resolve_term(raw, graph);
      if (!resolution) continue;
      ConceptMention m;
      m.mention_text = raw;
      m.concept_id = resolution->concept_id;
      m.resolution = resolution->kind;
      m.token_begin = i;
      m.token_end = i + len;
      out.push_back(std::move(m));
      i += len;
      matched = true;
      break;
    }
    if (!matched) ++i;
  }
  return out;
}

// --------------------------------------------------------------------------
// Policy extraction

struct UnresolvedMention {
  std::int64_t sentence_index = 0;
  std::string mention_text;
  std::string reason;
  bool operator==(const UnresolvedMention&) const = default;
};

struct ExtractionStats {
  std::int64_t sentences_total = 0;
  std::int64_t sentences_matched = 0;
  bool operator==(const ExtractionStats&) const = default;
};

struct ExtractionResult {
  PolicySet policies;
  std::vector<UnresolvedMention> unresolved;
  ExtractionStats stats;
  bool operator==(const ExtractionResult&) const = default;
};

namespace detail {

// Function words plus domain-generic nouns that never name a sensitive
// attribute on their own; candidates for "unknown concept" alerts are the
// remaining tokens.
inline const std::set<std::string>& extraction_stopwords() {
  static const std::set<std::string> kList{
      "a",        "about",    "against", "all",      "an",        "and",
      "any",      "are",      "as",      "at",       "based",     "be",
      "been",     "bias",     "biased",  "by",       "data",      "dataset",
      "datasets", "decision", "decisions", "discriminate", "discriminatory",
      "do",       "does",     "for",     "from",     "in",        "information",
      "into",     "is",       "it",      "its",      "learning",  "machine",
      "made",     "make",     "making",  "may",      "ml",        "model",
      "models",   "must",     "never",   "no",       "non",       "not",
      "of",       "on",       "or",      "our",      "regard",    "respect",
      "should",   "software", "system",  "systems",  "that",      "the",
      "their",    "these",    "this",    "those",    "to",        "upon",
      "us",       "use",      "used",    "uses",     "using",     "we",
      "when",     "while",    "will",    "with",     "you",       "your"};
  return kList;
}

struct TriggerMatch {
  std::set<std::size_t> literal_positions;  // token indices matched literally
  bool matched = false;
};

inline TriggerMatch match_triggers(const std::vector<Token>& tokens,
                                   const std::vector<TriggerPattern>& patterns) {
  TriggerMatch result;
  for (const auto& p : patterns) {
    if (p.tokens.empty() || p.tokens.size() > tokens.size()) continue;
    for (std::size_t start = 0; start + p.tokens.size() <= tokens.size();
         ++start) {
      bool ok = true;
      for (std::size_t k = 0; k < p.tokens.size(); ++k) {
        if (p.tokens[k] == "*") continue;
        if (p.tokens[k] != tokens[start + k].text) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      result.matched = true;
      for (std::size_t k = 0; k < p.tokens.size(); ++k) {
        if (p.tokens[k] != "*") result.literal_positions.insert(start + k);
      }
    }
  }
  return result;
}

}  // namespace detail

inline ExtractionResult extract_policies(const std::string& document,
                                         const TriggerLexicon& lexicon,
                                         const ConceptGraph& graph,
                                         const std::string& source_name = "document") {
  ExtractionResult result;
  result.policies.source_digest = sha256_hex(document);
  auto sentences = segment_sentences(document);
  result.stats.sentences_total = static_cast<std::int64_t>(sentences.size());
  for (const auto& sentence : sentences) {
    auto tokens = detail::tokenize(sentence.text);
    auto deny = detail::match_triggers(tokens, lexicon.deny_triggers);
    auto fairness = detail::match_triggers(tokens, lexicon.fairness_triggers);
    if (!deny.matched && !fairness.matched) continue;
    result.stats.sentences_matched += 1;

    auto mentions = extract_concept_mentions(sentence.text, graph);
    std::vector<std::string> attributes;
    bool via_synonym = false;
    std::set<std::size_t> mention_positions;
    for (const auto& m : mentions) {
      attributes.push_back(m.concept_id);
      if (m.resolution == ResolutionKind::Synonym) via_synonym = true;
      for (std::size_t t = m.token_begin; t < m.token_end; ++t) {
        mention_positions.insert(t);
      }
    }
    attributes = normalize_attributes(attributes);

    // A trigger sentence with no resolvable concept cannot become a policy;
    // alert on its leftover tokens instead. Wildcard slots in a trigger stay
    // eligible as candidates.
    if (mentions.empty()) {
      std::set<std::size_t> covered = deny.literal_positions;
      covered.insert(fairness.literal_positions.begin(),
                     fairness.literal_positions.end());
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (covered.count(t)) continue;
        const std::string& token = tokens[t].text;
        if (detail::extraction_stopwords().count(token)) continue;
        if (token.find_first_not_of("0123456789") == std::string::npos) continue;
        result.unresolved.push_back(
            {static_cast<std::int64_t>(sentence.index), tokens[t].original,
             "unknown concept"});
      }
    }

    auto emit = [&](PolicyKind kind) {
      if (attributes.empty()) return;
      Policy p;
      p.kind = kind;
      p.attributes = attributes;
      p.provenance.source_document = source_name;
      p.provenance.sentence_index = static_cast<std::int64_t>(sentence.index);
      p.provenance.sentence_text = sentence.text;
      p.provenance.extraction_confidence = via_synonym ? 0.8 : 1.0;
      if (kind == PolicyKind::AccessControl) {
        p.id = "p" + std::to_string(sentence.index) + "-access";
        p.effect = Effect::DenyUse;
      } else {
        p.id = "p" + std::to_string(sentence.index) + "-fair";
        p.effect = Effect::RequireFairness;
        FairnessConstraint c;
        c.metrics = {Metric::OutputDeviation, Metric::DisparateImpact,
                     Metric::DisparateMistreatment};
        for (Metric m : c.metrics) c.thresholds[m] = default_threshold(m);
        p.fairness_constraint = c;
      }
      result.policies.policies.push_back(std::move(p));
    };
    if (deny.matched) emit(PolicyKind::AccessControl);
    if (fairness.matched) emit(PolicyKind::Fairness);
  }
  return result;
}

inline json extraction_result_to_json(const ExtractionResult& r) {
  json unresolved = json::array();
  for (const auto& u : r.unresolved) {
    unresolved.push_back({{"sentence_index", u.sentence_index},
                          {"mention_text", u.mention_text},
                          {"reason", u.reason}});
  }
  return json{{"policies", policy_set_to_json(r.policies)},
              {"unresolved", unresolved},
              {"stats",
               {{"sentences_total", r.stats.sentences_total},
                {"sentences_matched", r.stats.sentences_matched}}}};
}

}  // namespace fairgate

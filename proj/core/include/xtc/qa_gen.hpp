#pragma once

#include <nlohmann/json.hpp>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "xtc/error.hpp"
#include "xtc/model_client.hpp"
#include "xtc/scene_graph.hpp"

namespace xtc {

// ---- prompt --------------------------------------------------------------------

enum class PromptStage { linearized, object_refined, sentence_refined };

std::string_view to_string(PromptStage s) noexcept;
PromptStage prompt_stage_from_string(std::string_view s);

struct PromptDraft {
  PromptStage stage = PromptStage::linearized;
  std::string text;
  std::set<std::string> source_fact_ids;
  std::vector<std::string> object_clauses;    // one per node
  std::vector<std::string> relation_clauses;  // one per edge
  std::vector<std::string> required_labels;   // coverage check terms
  bool refinement_fallback = false;
  std::vector<std::string> warnings;

  bool operator==(const PromptDraft&) const = default;
};

nlohmann::ordered_json to_json(const PromptDraft& d);
PromptDraft prompt_draft_from_json(const nlohmann::json& j);

/// Clauses "a {attrs} {label}" and "the {subject} is {predicates} the {object}",
/// joined into sentences.
PromptDraft linearize(const SceneGraph& g);

/// Text after this marker in a refinement prompt is the payload being rewritten.
inline constexpr std::string_view kRefinePayloadMarker = "\n---\n";
inline constexpr std::string_view kObjectRefineTemplate =
    "Rewrite the following object description as one concise, natural caption. Keep the object "
    "name and every attribute; add nothing that is not stated.";
inline constexpr std::string_view kSentenceRefineTemplate =
    "Weave the following descriptions into one fluent scene description. Keep every object, "
    "attribute and relation; add nothing that is not stated.";

/// Advances `draft` one stage (linearized -> object_refined -> sentence_refined).
/// When the client output loses a node label, the input text is kept and
/// `refinement_fallback` is set. Client errors propagate.
PromptDraft refine_prompt(const PromptDraft& draft, PromptStage stage, ChatClient& chat);

// ---- disambiguation ------------------------------------------------------------

class UndisambiguableError : public InputError {
 public:
  using InputError::InputError;
};

/// True when the two values cannot be confused: disjoint lowercase token sets and
/// neither lowercase string contains the other.
bool attribute_values_distinct(std::string_view a, std::string_view b);

/// True when some key in `keys` separates `target` from `competitor`. A competitor
/// missing the key is not separated by it.
bool keys_distinguish(const Node& target, const Node& competitor, std::span<const std::string> keys);

struct Disambiguation {
  std::vector<std::string> keys;  // sorted
  bool ambiguous = false;
};

/// Smallest (then lexicographically first) attribute subset of `target` separating it
/// from every competitor, searched by increasing size. Returns all keys with
/// `ambiguous` set when no subset works. Throws UndisambiguableError when the target
/// has no attributes but competitors exist.
Disambiguation minimal_disambiguating_attributes(const Node& target, std::span<const Node> competitors);

// ---- questions -----------------------------------------------------------------

enum class QueryKind { attribute_query, object_retrieval, relation_query };

std::string_view to_string(QueryKind k) noexcept;
QueryKind query_kind_from_string(std::string_view s);

struct QAItem {
  std::string fact_id;
  QueryKind kind = QueryKind::attribute_query;
  std::string question;
  std::string answer;
  std::string subject;
  std::string object;  // relation queries only
  std::vector<std::string> disambiguator;
  std::vector<std::string> object_disambiguator;
  bool ambiguous = false;  // excluded from scoring by default

  bool operator==(const QAItem&) const = default;
};

/// Sorted by fact_id.
std::vector<QAItem> generate_questions(const SceneGraph& g);

nlohmann::ordered_json to_json(const QAItem& item);
QAItem qa_item_from_json(const nlohmann::json& j);
std::string qa_to_jsonl(const std::vector<QAItem>& items);
std::vector<QAItem> qa_from_jsonl(std::string_view text);

}  // namespace xtc

#pragma once

#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "xtc/model_client.hpp"
#include "xtc/scene_graph.hpp"

namespace xtc {

inline constexpr std::string_view kNoRelation = "NR";

/// Raw per-pair output of a relation predictor; `scores` always carries "NR".
struct RawRelationPrediction {
  std::string source;
  std::string target;
  std::map<std::string, double> scores;

  /// Throws InvariantError when "NR" is missing or a score leaves [0,1].
  void validate() const;
};

struct RefineConfig {
  double nr_threshold = 0.5;         // pairs with s_NR >= this are dropped
  double predicate_threshold = 0.4;  // predicates with s_r >= this survive
  std::set<std::string> exclusive_predicates = default_exclusive_predicates();
  int merge_min_group = 3;
  double bbox_pad_fraction = 0.05;  // of max(width, height)

  static std::set<std::string> default_exclusive_predicates();
  void validate() const;
};

struct RelationCandidate {
  std::string source;
  std::string target;
  std::string predicate;
  double score = 0.0;

  std::string describe() const;  // "source -[predicate]-> target"
  auto operator<=>(const RelationCandidate&) const = default;
};

/// Threshold filtering. Output sorted by (source, target, predicate).
std::vector<RelationCandidate> filter_relations(const std::vector<RawRelationPrediction>& preds,
                                                const RefineConfig& cfg);

/// For each exclusive predicate and object keep only the top-scoring subject
/// (ties go to the lexicographically smallest subject id). Order preserved.
std::vector<RelationCandidate> enforce_exclusive_predicates(std::vector<RelationCandidate> candidates,
                                                            const RefineConfig& cfg);

/// Adds candidates to `g` as edges (one record per ordered pair, predicates grouped).
SceneGraph attach_relations(const SceneGraph& g, const std::vector<RelationCandidate>& candidates);

/// Replaces single-linkage clusters of overlapping same-label nodes (size >= merge_min_group)
/// with one meta-node. Meta-nodes are never re-grouped, which makes the operation idempotent.
SceneGraph merge_overlapping_instances(const SceneGraph& g, const RefineConfig& cfg);

// ---- VLM relation verification -------------------------------------------------

inline constexpr std::string_view kRelationVerificationPrompt =
    "Verify the relationship between the object in the RED bounding box (Subject) and the BLUE "
    "bounding box (Object). Return JSON with key `answer` set to `Yes` or `No` only.";

struct VerificationRequest {
  std::string image;
  BBox subject_bbox;  // drawn in red
  BBox object_bbox;   // drawn in blue
  std::string predicate;
  std::string prompt = std::string(kRelationVerificationPrompt);

  /// Wire document: {image, subject_bbox, object_bbox, predicate}.
  nlohmann::json to_json() const;
};

enum class VerificationAnswer { yes, no };

/// Needs both endpoints to carry bboxes; throws InputError otherwise.
VerificationRequest build_relation_verification_request(const std::string& image_ref,
                                                        const SceneGraph& g,
                                                        const RelationCandidate& candidate);

/// Accepts a bare `{"answer":"Yes"|"No"}` or text ending in one. Throws ParseError.
VerificationAnswer parse_verification_answer(std::string_view response);

/// Keeps candidates answered Yes. Throws InputError naming an uncovered candidate.
std::vector<RelationCandidate> apply_verification(
    const std::vector<RelationCandidate>& candidates,
    const std::map<RelationCandidate, VerificationAnswer>& answers);

// ---- raw scene inputs ----------------------------------------------------------

/// Segmenter output before relation refinement:
/// {"schema": "xtc-raw/1", "graph": <scene graph>, "relations": [{source, target, scores}]}.
struct RawScene {
  SceneGraph graph;
  std::vector<RawRelationPrediction> relations;
};

RawScene raw_scene_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const RawScene& raw);

using RelationVerifier = std::function<VerificationAnswer(const RelationCandidate&)>;

/// Verifier asking a chat VLM: the prompt is followed by the request document on a new line.
RelationVerifier chat_relation_verifier(ChatClient& chat, const std::string& image_ref, const SceneGraph& g);

/// filter -> exclusivity -> verification (when given) -> attach -> merge.
SceneGraph refine_scene(const RawScene& raw, const RefineConfig& cfg, const RelationVerifier& verify = {});

}  // namespace xtc

#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "xtc/hungarian.hpp"
#include "xtc/model_client.hpp"
#include "xtc/scene_graph.hpp"

namespace xtc {

/// Weights of the node cost and of the incident-edge value similarity.
///   cost    = alpha * (1 - sim_attr) + beta * (1 - sim_edge)
///   sim_val = rel_text_weight * cos(z_e, z_e') + neighbor_attr_weight * mean endpoint sim_attr
struct CostParams {
  double alpha = 0.7;
  double beta = 0.3;
  double rel_text_weight = 0.4;
  double neighbor_attr_weight = 0.6;

  /// Weights in [0,1], alpha + beta = 1 and rel_text_weight + neighbor_attr_weight = 1.
  void validate() const;
};

struct NodePair {
  std::string gt;
  std::string pred;
  double attr_sim = 0.0;
  double edge_sim = 0.0;
  double cost = 0.0;
};

struct EdgePair {
  std::string gt_source;
  std::string gt_target;
  std::string pred_source;
  std::string pred_target;
};

struct MatchResult {
  std::string gt_image_id;
  std::string pred_image_id;
  std::size_t gt_node_count = 0;
  std::vector<NodePair> node_pairs;  // by label, then gt id
  std::vector<EdgePair> edge_pairs;  // by gt (source, target)
  std::vector<std::string> unmatched_gt;
  std::vector<std::string> unmatched_pred;

  double total_cost() const;
  /// |matched gt nodes| / |gt nodes|; 1.0 for an empty reference graph.
  double matched_node_fraction() const;
  std::optional<std::string> pred_for(std::string_view gt_id) const;
  const EdgePair* edge_for(std::string_view gt_source, std::string_view gt_target) const;
};

nlohmann::ordered_json to_json(const MatchResult& m);
MatchResult match_result_from_json(const nlohmann::json& j);

/// Caches embeddings of the strings one comparison needs and serves cosines.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(Embedder& embedder) : embedder_(embedder) {}

  /// Embeds every not-yet-seen text in one batch.
  void prefetch(const std::vector<std::string>& texts);
  const EmbeddingVector& vector(const std::string& text);
  /// Cosine clamped to [0,1]; exactly 1 for identical strings.
  double similarity(const std::string& a, const std::string& b);

 private:
  Embedder& embedder_;
  std::map<std::string, EmbeddingVector, std::less<>> vectors_;
};

/// Cosine of two vectors clamped to [0,1]; 0 when either is the zero vector.
double clamped_cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Per-key value string: comma-separated parts trimmed, sorted and re-joined.
std::string attribute_value_text(std::string_view value);

/// "[source_label] [predicates sorted and joined by ' and '] [target_label]".
std::string relation_text(const Edge& e, const SceneGraph& g);

/// Mean over the union of keys of per-key cosines; keys on one side only score 0;
/// 1.0 when both nodes have no attributes.
double attr_similarity(const Node& a, const Node& b, EmbeddingTable& table);
double attr_similarity(const Node& a, const Node& b, Embedder& embedder);

/// The weighted combination itself.
double edge_value_similarity(double relation_cosine, double neighbor_attr_sim, double self_attr_sim,
                             const CostParams& params = {});

/// sim_val of incident edge `e` of `v` (in `g`) against incident edge `e_hat` of `v_hat` (in `g_hat`).
double edge_value_similarity(const Edge& e, const Node& v, const SceneGraph& g, const Edge& e_hat,
                             const Node& v_hat, const SceneGraph& g_hat, EmbeddingTable& table,
                             const CostParams& params = {});

/// Mean sim_val over the optimal assignment of a sim_val matrix (rows: edges of v).
/// 1.0 when both sides are empty, 0.0 when exactly one is.
double structural_similarity(std::size_t rows, std::size_t cols, const std::vector<double>& sim_vals);

double edge_structural_similarity(const Node& v, const SceneGraph& g, const Node& v_hat,
                                  const SceneGraph& g_hat, EmbeddingTable& table,
                                  const CostParams& params = {});
double edge_structural_similarity(const Node& v, const SceneGraph& g, const Node& v_hat,
                                  const SceneGraph& g_hat, Embedder& embedder,
                                  const CostParams& params = {});

/// Node cost for a gt/pred pair.
double node_cost(double attr_sim, double edge_sim, const CostParams& params);

/// Label-grouped two-stage assignment. Every pair the solver produces is kept
/// (no rejection threshold). A gt edge (u, v) is matched when u -> u', v -> v'
/// and the predicted graph has the edge u' -> v'.
MatchResult match_graphs(const SceneGraph& gt, const SceneGraph& pred, const CostParams& params,
                         Embedder& embedder);

}  // namespace xtc

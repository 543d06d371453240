#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xtc {

inline constexpr std::string_view kSceneGraphSchema = "xtc-sg/1";

/// Axis-aligned box in pixel coordinates: top-left corner plus extent.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  bool operator==(const BBox&) const = default;
};

struct Node {
  std::string id;
  std::string label;
  std::optional<BBox> bbox;
  std::map<std::string, std::string> attributes;
  int merged_count = 1;  // >1 only for meta-nodes

  bool operator==(const Node&) const = default;
};

struct Predicate {
  std::string name;
  std::optional<double> score;

  bool operator==(const Predicate&) const = default;
};

/// One record per ordered (source, target) pair; parallel relations live in `predicates`.
struct Edge {
  std::string source;
  std::string target;
  std::vector<Predicate> predicates;

  std::vector<std::string> predicate_names() const;
  bool operator==(const Edge&) const = default;
};

/// A validated, immutable scene graph.
///
/// Construction checks every invariant (unique node ids, no dangling or self-loop
/// edges, one edge per ordered pair, distinct predicates per edge, merged counts,
/// boxes inside the image) and brings nodes and edges into canonical order: nodes
/// sorted by id, edges by (source, target). Predicate order inside an edge is kept.
class SceneGraph {
 public:
  SceneGraph(std::string image_id, int width, int height, std::vector<Node> nodes,
             std::vector<Edge> edges);

  const std::string& image_id() const noexcept { return image_id_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  const Node* find_node(std::string_view id) const noexcept;
  const Edge* find_edge(std::string_view source, std::string_view target) const noexcept;
  /// In-edges and out-edges of `id`, in canonical edge order.
  std::vector<const Edge*> incident_edges(std::string_view id) const;
  std::size_t attribute_count() const noexcept;

  bool operator==(const SceneGraph&) const = default;

 private:
  std::string image_id_;
  int width_;
  int height_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
};

/// Parses a scene-graph document (JSON text). Throws SchemaError or InvariantError.
SceneGraph parse_scene_graph(std::string_view document);
SceneGraph scene_graph_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const SceneGraph& g);
/// Canonical form: sorted keys, sorted lists, no insignificant whitespace, UTF-8.
std::string serialize_scene_graph(const SceneGraph& g);

/// Integral values are emitted as JSON integers so canonical text is stable.
nlohmann::json canonical_number(double v);

}  // namespace xtc

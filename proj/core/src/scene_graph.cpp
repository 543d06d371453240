#include "xtc/scene_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <set>

#include "xtc/error.hpp"

namespace xtc {

using nlohmann::json;

std::vector<std::string> Edge::predicate_names() const {
  std::vector<std::string> out;
  out.reserve(predicates.size());
  for (const auto& p : predicates) out.push_back(p.name);
  return out;
}

namespace {

bool finite_in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void validate_node(const Node& n, int width, int height) {
  if (n.id.empty()) throw InvariantError("", "node with empty id");
  if (n.label.empty()) throw InvariantError(n.id, "node '" + n.id + "' has an empty label");
  if (n.merged_count < 1 || n.merged_count == 2) {
    throw InvariantError(n.id, "node '" + n.id + "' has merged_count " +
                                   std::to_string(n.merged_count) + " (must be 1 or >= 3)");
  }
  for (const auto& [k, v] : n.attributes) {
    if (k.empty()) throw InvariantError(n.id, "node '" + n.id + "' has an empty attribute key");
  }
  if (n.bbox) {
    const BBox& b = *n.bbox;
    const bool finite = std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
                        std::isfinite(b.h);
    if (!finite || b.x < 0 || b.y < 0 || b.w < 0 || b.h < 0 || b.right() > width ||
        b.bottom() > height) {
      throw InvariantError(n.id, "node '" + n.id + "' bbox lies outside the image rectangle");
    }
  }
}

}  // namespace

SceneGraph::SceneGraph(std::string image_id, int width, int height, std::vector<Node> nodes,
                       std::vector<Edge> edges)
    : image_id_(std::move(image_id)),
      width_(width),
      height_(height),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)) {
  if (image_id_.empty()) throw InvariantError("image_id", "scene graph has an empty image_id");
  if (width_ <= 0 || height_ <= 0) {
    throw InvariantError("width/height", "image dimensions must be positive");
  }
  std::sort(nodes_.begin(), nodes_.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    validate_node(nodes_[i], width_, height_);
    if (i > 0 && nodes_[i - 1].id == nodes_[i].id) {
      throw InvariantError(nodes_[i].id, "duplicate node id '" + nodes_[i].id + "'");
    }
  }

  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.source, a.target) < std::tie(b.source, b.target);
  });
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    const std::string name = e.source + "->" + e.target;
    if (!find_node(e.source)) {
      throw InvariantError(e.source, "edge " + name + " references missing node '" + e.source + "'");
    }
    if (!find_node(e.target)) {
      throw InvariantError(e.target, "edge " + name + " references missing node '" + e.target + "'");
    }
    if (e.source == e.target) throw InvariantError(name, "self-loop edge " + name);
    if (i > 0 && edges_[i - 1].source == e.source && edges_[i - 1].target == e.target) {
      throw InvariantError(name, "more than one edge record for " + name);
    }
    if (e.predicates.empty()) throw InvariantError(name, "edge " + name + " has no predicates");
    std::set<std::string> seen;
    for (const auto& p : e.predicates) {
      if (p.name.empty()) throw InvariantError(name, "edge " + name + " has an empty predicate");
      if (!seen.insert(p.name).second) {
        throw InvariantError(name, "edge " + name + " repeats predicate '" + p.name + "'");
      }
      if (p.score && !finite_in_unit(*p.score)) {
        throw InvariantError(name, "edge " + name + " predicate '" + p.name +
                                       "' has a score outside [0,1]");
      }
    }
  }
}

const Node* SceneGraph::find_node(std::string_view id) const noexcept {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const Node& n, std::string_view key) { return n.id < key; });
  return (it != nodes_.end() && it->id == id) ? &*it : nullptr;
}

const Edge* SceneGraph::find_edge(std::string_view source, std::string_view target) const noexcept {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{source, target},
                             [](const Edge& e, const std::pair<std::string_view, std::string_view>& k) {
                               return std::pair<std::string_view, std::string_view>{e.source, e.target} < k;
                             });
  return (it != edges_.end() && it->source == source && it->target == target) ? &*it : nullptr;
}

std::vector<const Edge*> SceneGraph::incident_edges(std::string_view id) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges_) {
    if (e.source == id || e.target == id) out.push_back(&e);
  }
  return out;
}

std::size_t SceneGraph::attribute_count() const noexcept {
  std::size_t n = 0;
  for (const auto& node : nodes_) n += node.attributes.size();
  return n;
}

// ---- JSON interchange ------------------------------------------------------

json canonical_number(double v) {
  if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 9.007199254740992e15) {
    return json(static_cast<std::int64_t>(v));
  }
  return json(v);
}

namespace {

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  throw SchemaError(path + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(path, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) schema_fail(path + "." + key, "expected string");
  return v.get<std::string>();
}

int require_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) schema_fail(path, "expected integer");
  const auto i = v.get<std::int64_t>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
    schema_fail(path, "integer out of range");
  }
  return static_cast<int>(i);
}

double require_number(const json& v, const std::string& path) {
  if (!v.is_number()) schema_fail(path, "expected number");
  return v.get<double>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& path) {
  for (const auto& [k, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      schema_fail(path, "unknown field '" + k + "'");
    }
  }
}

Node node_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) schema_fail(path, "expected object");
  reject_unknown(j, {"id", "label", "bbox", "attributes", "merged_count"}, path);
  Node n;
  n.id = require_string(j, "id", path);
  n.label = require_string(j, "label", path);
  if (auto it = j.find("bbox"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 4) schema_fail(path + ".bbox", "expected [x,y,w,h]");
    const std::string bp = path + ".bbox";
    n.bbox = BBox{require_number((*it)[0], bp + "[0]"), require_number((*it)[1], bp + "[1]"),
                  require_number((*it)[2], bp + "[2]"), require_number((*it)[3], bp + "[3]")};
  }
  if (auto it = j.find("attributes"); it != j.end()) {
    if (!it->is_object()) schema_fail(path + ".attributes", "expected object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) schema_fail(path + ".attributes." + k, "expected string");
      n.attributes.emplace(k, v.get<std::string>());
    }
  }
  if (auto it = j.find("merged_count"); it != j.end()) {
    n.merged_count = require_int(*it, path + ".merged_count");
  }
  return n;
}

Edge edge_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) schema_fail(path, "expected object");
  reject_unknown(j, {"source", "target", "predicates"}, path);
  Edge e;
  e.source = require_string(j, "source", path);
  e.target = require_string(j, "target", path);
  const json& preds = require(j, "predicates", path);
  if (!preds.is_array()) schema_fail(path + ".predicates", "expected array");
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const std::string pp = path + ".predicates[" + std::to_string(i) + "]";
    const json& p = preds[i];
    if (!p.is_object()) schema_fail(pp, "expected object");
    reject_unknown(p, {"name", "score"}, pp);
    Predicate pred{require_string(p, "name", pp), std::nullopt};
    if (auto it = p.find("score"); it != p.end() && !it->is_null()) {
      pred.score = require_number(*it, pp + ".score");
    }
    e.predicates.push_back(std::move(pred));
  }
  return e;
}

}  // namespace

SceneGraph scene_graph_from_json(const json& doc) {
  if (!doc.is_object()) schema_fail("$", "expected object");
  reject_unknown(doc, {"schema", "image_id", "width", "height", "nodes", "edges"}, "$");
  if (auto it = doc.find("schema"); it != doc.end()) {
    if (!it->is_string() || it->get<std::string>() != kSceneGraphSchema) {
      schema_fail("$.schema", "unsupported schema version (expected xtc-sg/1)");
    }
  }
  std::string image_id = require_string(doc, "image_id", "$");
  const int width = require_int(require(doc, "width", "$"), "$.width");
  const int height = require_int(require(doc, "height", "$"), "$.height");

  const json& jnodes = require(doc, "nodes", "$");
  if (!jnodes.is_array()) schema_fail("$.nodes", "expected array");
  std::vector<Node> nodes;
  nodes.reserve(jnodes.size());
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    nodes.push_back(node_from_json(jnodes[i], "$.nodes[" + std::to_string(i) + "]"));
  }

  std::vector<Edge> edges;
  if (auto it = doc.find("edges"); it != doc.end()) {
    if (!it->is_array()) schema_fail("$.edges", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      edges.push_back(edge_from_json((*it)[i], "$.edges[" + std::to_string(i) + "]"));
    }
  }
  return SceneGraph(std::move(image_id), width, height, std::move(nodes), std::move(edges));
}

SceneGraph parse_scene_graph(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("scene graph is not valid JSON: ") + e.what());
  }
  return scene_graph_from_json(doc);
}

json to_json(const SceneGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes()) {
    json jn = {{"id", n.id}, {"label", n.label}, {"merged_count", n.merged_count}};
    jn["attributes"] = json::object();
    for (const auto& [k, v] : n.attributes) jn["attributes"][k] = v;
    if (n.bbox) {
      jn["bbox"] = json::array({canonical_number(n.bbox->x), canonical_number(n.bbox->y),
                                canonical_number(n.bbox->w), canonical_number(n.bbox->h)});
    }
    nodes.push_back(std::move(jn));
  }
  json edges = json::array();
  for (const auto& e : g.edges()) {
    json preds = json::array();
    for (const auto& p : e.predicates) {
      json jp = {{"name", p.name}};
      if (p.score) jp["score"] = canonical_number(*p.score);
      preds.push_back(std::move(jp));
    }
    edges.push_back({{"source", e.source}, {"target", e.target}, {"predicates", std::move(preds)}});
  }
  return json{{"schema", std::string(kSceneGraphSchema)},
              {"image_id", g.image_id()},
              {"width", g.width()},
              {"height", g.height()},
              {"nodes", std::move(nodes)},
              {"edges", std::move(edges)}};
}

std::string serialize_scene_graph(const SceneGraph& g) { return to_json(g).dump(); }

}  // namespace xtc

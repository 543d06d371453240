#include "xtc/graph_match.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "xtc/error.hpp"
#include "xtc/text.hpp"

namespace xtc {

void CostParams::validate() const {
  auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!unit(alpha) || !unit(beta) || !unit(rel_text_weight) || !unit(neighbor_attr_weight)) {
    throw InputError("cost params: weights must lie in [0,1]");
  }
  if (std::fabs(alpha + beta - 1.0) > 1e-9) throw InputError("cost params: alpha + beta must equal 1");
  if (std::fabs(rel_text_weight + neighbor_attr_weight - 1.0) > 1e-9) {
    throw InputError("cost params: relation-text and neighbor weights must sum to 1");
  }
}

// ---- MatchResult ---------------------------------------------------------------

double MatchResult::total_cost() const {
  double t = 0.0;
  for (const auto& p : node_pairs) t += p.cost;
  return t;
}

double MatchResult::matched_node_fraction() const {
  if (gt_node_count == 0) return 1.0;
  return static_cast<double>(node_pairs.size()) / static_cast<double>(gt_node_count);
}

std::optional<std::string> MatchResult::pred_for(std::string_view gt_id) const {
  for (const auto& p : node_pairs) {
    if (p.gt == gt_id) return p.pred;
  }
  return std::nullopt;
}

const EdgePair* MatchResult::edge_for(std::string_view gt_source, std::string_view gt_target) const {
  for (const auto& e : edge_pairs) {
    if (e.gt_source == gt_source && e.gt_target == gt_target) return &e;
  }
  return nullptr;
}

nlohmann::ordered_json to_json(const MatchResult& m) {
  nlohmann::ordered_json j;
  j["gt_image_id"] = m.gt_image_id;
  j["pred_image_id"] = m.pred_image_id;
  j["gt_node_count"] = m.gt_node_count;
  j["matched_node_fraction"] = m.matched_node_fraction();
  j["total_cost"] = m.total_cost();
  auto& nodes = j["node_pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : m.node_pairs) {
    nodes.push_back({{"gt", p.gt}, {"pred", p.pred}, {"attr_sim", p.attr_sim}, {"edge_sim", p.edge_sim},
                     {"cost", p.cost}});
  }
  auto& edges = j["edge_pairs"] = nlohmann::ordered_json::array();
  for (const auto& e : m.edge_pairs) {
    edges.push_back({{"gt_source", e.gt_source}, {"gt_target", e.gt_target},
                     {"pred_source", e.pred_source}, {"pred_target", e.pred_target}});
  }
  j["unmatched_gt"] = m.unmatched_gt;
  j["unmatched_pred"] = m.unmatched_pred;
  return j;
}

MatchResult match_result_from_json(const nlohmann::json& j) {
  try {
    MatchResult m;
    m.gt_image_id = j.at("gt_image_id").get<std::string>();
    m.pred_image_id = j.at("pred_image_id").get<std::string>();
    m.gt_node_count = j.at("gt_node_count").get<std::size_t>();
    for (const auto& p : j.at("node_pairs")) {
      m.node_pairs.push_back({p.at("gt").get<std::string>(), p.at("pred").get<std::string>(),
                              p.at("attr_sim").get<double>(), p.at("edge_sim").get<double>(),
                              p.at("cost").get<double>()});
    }
    for (const auto& e : j.at("edge_pairs")) {
      m.edge_pairs.push_back({e.at("gt_source").get<std::string>(), e.at("gt_target").get<std::string>(),
                              e.at("pred_source").get<std::string>(), e.at("pred_target").get<std::string>()});
    }
    m.unmatched_gt = j.at("unmatched_gt").get<std::vector<std::string>>();
    m.unmatched_pred = j.at("unmatched_pred").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("match result: ") + e.what());
  }
}

// ---- embeddings ----------------------------------------------------------------

double clamped_cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) throw InputError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

void EmbeddingTable::prefetch(const std::vector<std::string>& texts) {
  std::vector<std::string> missing;
  std::set<std::string> queued;
  for (const auto& t : texts) {
    if (!vectors_.contains(t) && queued.insert(t).second) missing.push_back(t);
  }
  if (missing.empty()) return;
  auto vecs = embedder_.embed(missing);
  if (vecs.size() != missing.size()) throw ClientError("embedder returned a wrong number of vectors", false);
  for (std::size_t i = 0; i < missing.size(); ++i) vectors_.emplace(missing[i], std::move(vecs[i]));
}

const EmbeddingVector& EmbeddingTable::vector(const std::string& text) {
  auto it = vectors_.find(text);
  if (it == vectors_.end()) {
    prefetch({text});
    it = vectors_.find(text);
  }
  return it->second;
}

double EmbeddingTable::similarity(const std::string& a, const std::string& b) {
  if (a == b) return 1.0;
  return clamped_cosine(vector(a), vector(b));
}

// ---- similarities --------------------------------------------------------------

std::string attribute_value_text(std::string_view value) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = value.find(',', start);
    std::string part = trim(value.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!part.empty()) parts.push_back(std::move(part));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  std::sort(parts.begin(), parts.end());
  return join(parts, ", ");
}

std::string relation_text(const Edge& e, const SceneGraph& g) {
  auto names = e.predicate_names();
  std::sort(names.begin(), names.end());
  const Node* s = g.find_node(e.source);
  const Node* t = g.find_node(e.target);
  return (s ? s->label : e.source) + " " + join(names, " and ") + " " + (t ? t->label : e.target);
}

double attr_similarity(const Node& a, const Node& b, EmbeddingTable& table) {
  std::set<std::string> keys;
  for (const auto& [k, _] : a.attributes) keys.insert(k);
  for (const auto& [k, _] : b.attributes) keys.insert(k);
  if (keys.empty()) return 1.0;
  double sum = 0.0;
  for (const auto& k : keys) {
    auto ia = a.attributes.find(k);
    auto ib = b.attributes.find(k);
    if (ia == a.attributes.end() || ib == b.attributes.end()) continue;  // one-sided key scores 0
    sum += table.similarity(attribute_value_text(ia->second), attribute_value_text(ib->second));
  }
  return sum / static_cast<double>(keys.size());
}

double attr_similarity(const Node& a, const Node& b, Embedder& embedder) {
  EmbeddingTable table(embedder);
  return attr_similarity(a, b, table);
}

double edge_value_similarity(double relation_cosine, double neighbor_attr_sim, double self_attr_sim,
                             const CostParams& params) {
  return params.rel_text_weight * relation_cosine +
         params.neighbor_attr_weight * (neighbor_attr_sim + self_attr_sim) / 2.0;
}

namespace {

const Node& other_endpoint(const Edge& e, const Node& v, const SceneGraph& g) {
  const std::string& id = e.source == v.id ? e.target : e.source;
  const Node* n = g.find_node(id);
  if (!n) throw InputError("edge endpoint '" + id + "' missing from graph '" + g.image_id() + "'");
  return *n;
}

}  // namespace

double edge_value_similarity(const Edge& e, const Node& v, const SceneGraph& g, const Edge& e_hat,
                             const Node& v_hat, const SceneGraph& g_hat, EmbeddingTable& table,
                             const CostParams& params) {
  const double rel = table.similarity(relation_text(e, g), relation_text(e_hat, g_hat));
  const double nbr = attr_similarity(other_endpoint(e, v, g), other_endpoint(e_hat, v_hat, g_hat), table);
  const double self = attr_similarity(v, v_hat, table);
  return edge_value_similarity(rel, nbr, self, params);
}

double structural_similarity(std::size_t rows, std::size_t cols, const std::vector<double>& sim_vals) {
  if (rows == 0 && cols == 0) return 1.0;
  if (rows == 0 || cols == 0) return 0.0;
  if (sim_vals.size() != rows * cols) throw InputError("structural_similarity: matrix size mismatch");
  CostMatrix cost(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) cost(r, c) = 1.0 - sim_vals[r * cols + c];
  }
  const auto assignment = solve_assignment(cost);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [r, c] : assignment.pairs()) {
    sum += sim_vals[r * cols + c];
    ++n;
  }
  return sum / static_cast<double>(n);
}

double edge_structural_similarity(const Node& v, const SceneGraph& g, const Node& v_hat,
                                  const SceneGraph& g_hat, EmbeddingTable& table,
                                  const CostParams& params) {
  const auto edges = g.incident_edges(v.id);
  const auto edges_hat = g_hat.incident_edges(v_hat.id);
  std::vector<double> sims(edges.size() * edges_hat.size());
  for (std::size_t r = 0; r < edges.size(); ++r) {
    for (std::size_t c = 0; c < edges_hat.size(); ++c) {
      sims[r * edges_hat.size() + c] =
          edge_value_similarity(*edges[r], v, g, *edges_hat[c], v_hat, g_hat, table, params);
    }
  }
  return structural_similarity(edges.size(), edges_hat.size(), sims);
}

double edge_structural_similarity(const Node& v, const SceneGraph& g, const Node& v_hat,
                                  const SceneGraph& g_hat, Embedder& embedder, const CostParams& params) {
  EmbeddingTable table(embedder);
  return edge_structural_similarity(v, g, v_hat, g_hat, table, params);
}

double node_cost(double attr_sim, double edge_sim, const CostParams& params) {
  return params.alpha * (1.0 - attr_sim) + params.beta * (1.0 - edge_sim);
}

namespace {

void collect_texts(const SceneGraph& g, std::vector<std::string>& out) {
  for (const auto& n : g.nodes()) {
    for (const auto& [_, v] : n.attributes) out.push_back(attribute_value_text(v));
  }
  for (const auto& e : g.edges()) out.push_back(relation_text(e, g));
}

}  // namespace

MatchResult match_graphs(const SceneGraph& gt, const SceneGraph& pred, const CostParams& params,
                         Embedder& embedder) {
  params.validate();
  EmbeddingTable table(embedder);
  {
    std::vector<std::string> texts;
    collect_texts(gt, texts);
    collect_texts(pred, texts);
    table.prefetch(texts);
  }

  std::map<std::string, std::vector<const Node*>> gt_groups, pred_groups;
  for (const auto& n : gt.nodes()) gt_groups[n.label].push_back(&n);
  for (const auto& n : pred.nodes()) pred_groups[n.label].push_back(&n);

  MatchResult result;
  result.gt_image_id = gt.image_id();
  result.pred_image_id = pred.image_id();
  result.gt_node_count = gt.nodes().size();
  std::set<std::string> matched_gt, matched_pred;

  for (const auto& [label, gt_nodes] : gt_groups) {
    auto it = pred_groups.find(label);
    if (it == pred_groups.end()) continue;
    const auto& pred_nodes = it->second;
    CostMatrix cost(gt_nodes.size(), pred_nodes.size());
    std::vector<double> attr(gt_nodes.size() * pred_nodes.size());
    std::vector<double> edge(attr.size());
    for (std::size_t i = 0; i < gt_nodes.size(); ++i) {
      for (std::size_t j = 0; j < pred_nodes.size(); ++j) {
        const std::size_t k = i * pred_nodes.size() + j;
        attr[k] = attr_similarity(*gt_nodes[i], *pred_nodes[j], table);
        edge[k] = edge_structural_similarity(*gt_nodes[i], gt, *pred_nodes[j], pred, table, params);
        cost(i, j) = node_cost(attr[k], edge[k], params);
      }
    }
    for (const auto& [i, j] : solve_assignment(cost).pairs()) {
      const std::size_t k = i * pred_nodes.size() + j;
      result.node_pairs.push_back({gt_nodes[i]->id, pred_nodes[j]->id, attr[k], edge[k], cost(i, j)});
      matched_gt.insert(gt_nodes[i]->id);
      matched_pred.insert(pred_nodes[j]->id);
    }
  }
  for (const auto& n : gt.nodes()) {
    if (!matched_gt.contains(n.id)) result.unmatched_gt.push_back(n.id);
  }
  for (const auto& n : pred.nodes()) {
    if (!matched_pred.contains(n.id)) result.unmatched_pred.push_back(n.id);
  }

  std::map<std::string, std::string> image_of;
  for (const auto& p : result.node_pairs) image_of[p.gt] = p.pred;
  for (const auto& e : gt.edges()) {
    auto s = image_of.find(e.source);
    auto t = image_of.find(e.target);
    if (s == image_of.end() || t == image_of.end()) continue;
    if (pred.find_edge(s->second, t->second)) {
      result.edge_pairs.push_back({e.source, e.target, s->second, t->second});
    }
  }
  return result;
}

}  // namespace xtc

#include "xtc/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "xtc/error.hpp"
#include "xtc/text.hpp"

namespace xtc {

void RawRelationPrediction::validate() const {
  const std::string name = source + "->" + target;
  if (!scores.contains(std::string(kNoRelation))) {
    throw InvariantError(name, "relation prediction " + name + " lacks an NR score");
  }
  for (const auto& [p, s] : scores) {
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw InvariantError(name, "relation prediction " + name + " score for '" + p +
                                     "' is outside [0,1]");
    }
  }
}

std::set<std::string> RefineConfig::default_exclusive_predicates() {
  return {"eating", "driving", "drinking", "biting", "kicking", "swinging", "throwing", "catching"};
}

void RefineConfig::validate() const {
  auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!unit(nr_threshold) || !unit(predicate_threshold)) {
    throw InputError("refine config: thresholds must lie in [0,1]");
  }
  // merged_count == 2 is not a valid node, so groups of two can never be merged
  if (merge_min_group < 3) throw InputError("refine config: merge_min_group must be >= 3");
  if (!std::isfinite(bbox_pad_fraction) || bbox_pad_fraction < 0.0) {
    throw InputError("refine config: bbox_pad_fraction must be non-negative");
  }
}

std::string RelationCandidate::describe() const {
  return source + " -[" + predicate + "]-> " + target;
}

std::vector<RelationCandidate> filter_relations(const std::vector<RawRelationPrediction>& preds,
                                                const RefineConfig& cfg) {
  cfg.validate();
  std::vector<RelationCandidate> out;
  for (const auto& p : preds) {
    p.validate();
    if (p.scores.at(std::string(kNoRelation)) >= cfg.nr_threshold) continue;
    for (const auto& [name, score] : p.scores) {
      if (name == kNoRelation) continue;
      if (score >= cfg.predicate_threshold) out.push_back({p.source, p.target, name, score});
    }
  }
  std::sort(out.begin(), out.end(), [](const RelationCandidate& a, const RelationCandidate& b) {
    return std::tie(a.source, a.target, a.predicate) < std::tie(b.source, b.target, b.predicate);
  });
  return out;
}

std::vector<RelationCandidate> enforce_exclusive_predicates(std::vector<RelationCandidate> candidates,
                                                            const RefineConfig& cfg) {
  // (predicate, object) -> index of the winning candidate
  std::map<std::pair<std::string, std::string>, std::size_t> winner;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!cfg.exclusive_predicates.contains(c.predicate)) continue;
    auto [it, inserted] = winner.try_emplace({c.predicate, c.target}, i);
    if (inserted) continue;
    const auto& best = candidates[it->second];
    if (c.score > best.score || (c.score == best.score && c.source < best.source)) it->second = i;
  }
  std::vector<RelationCandidate> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (cfg.exclusive_predicates.contains(c.predicate) && winner.at({c.predicate, c.target}) != i) {
      continue;
    }
    out.push_back(std::move(candidates[i]));
  }
  return out;
}

namespace {

// Adds `p` to `preds`, keeping the larger score when the name already exists.
void add_predicate(std::vector<Predicate>& preds, const Predicate& p) {
  auto it = std::find_if(preds.begin(), preds.end(), [&](const Predicate& q) { return q.name == p.name; });
  if (it == preds.end()) {
    preds.push_back(p);
  } else if (p.score && (!it->score || *p.score > *it->score)) {
    it->score = p.score;
  }
}

bool overlaps(const BBox& a, const BBox& b) {
  return a.x < b.right() && b.x < a.right() && a.y < b.bottom() && b.y < a.bottom();
}

BBox padded(const BBox& b, double pad) { return {b.x - pad, b.y - pad, b.w + 2 * pad, b.h + 2 * pad}; }

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

SceneGraph attach_relations(const SceneGraph& g, const std::vector<RelationCandidate>& candidates) {
  std::map<std::pair<std::string, std::string>, std::vector<Predicate>> grouped;
  for (const auto& e : g.edges()) grouped[{e.source, e.target}] = e.predicates;
  for (const auto& c : candidates) add_predicate(grouped[{c.source, c.target}], {c.predicate, c.score});
  std::vector<Edge> edges;
  edges.reserve(grouped.size());
  for (auto& [key, preds] : grouped) edges.push_back({key.first, key.second, std::move(preds)});
  return SceneGraph(g.image_id(), g.width(), g.height(), g.nodes(), std::move(edges));
}

SceneGraph merge_overlapping_instances(const SceneGraph& g, const RefineConfig& cfg) {
  cfg.validate();
  const double pad = cfg.bbox_pad_fraction * std::max(g.width(), g.height());
  const auto& nodes = g.nodes();

  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].merged_count == 1) by_label[nodes[i].label].push_back(i);
  }

  std::map<std::string, std::string> remap;  // member id -> meta-node id
  std::vector<Node> out_nodes;
  std::vector<bool> consumed(nodes.size(), false);

  for (const auto& [label, members] : by_label) {
    if (members.size() < static_cast<std::size_t>(cfg.merge_min_group)) continue;
    for (std::size_t idx : members) {
      if (!nodes[idx].bbox) {
        throw InputError("merge_overlapping_instances: node '" + nodes[idx].id +
                         "' in candidate group '" + label + "' has no bbox");
      }
    }
    DisjointSet ds(members.size());
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        if (overlaps(padded(*nodes[members[a]].bbox, pad), padded(*nodes[members[b]].bbox, pad))) {
          ds.unite(a, b);
        }
      }
    }
    std::map<std::size_t, std::vector<std::size_t>> components;
    for (std::size_t a = 0; a < members.size(); ++a) components[ds.find(a)].push_back(members[a]);

    for (const auto& [root, group] : components) {
      if (group.size() < static_cast<std::size_t>(cfg.merge_min_group)) continue;
      // members are in id order, so the first id names the meta-node
      const Node& first = nodes[group.front()];
      Node meta{first.id, label, first.bbox, first.attributes, 0};
      double x1 = first.bbox->x, y1 = first.bbox->y, x2 = first.bbox->right(), y2 = first.bbox->bottom();
      for (std::size_t idx : group) {
        const Node& n = nodes[idx];
        x1 = std::min(x1, n.bbox->x);
        y1 = std::min(y1, n.bbox->y);
        x2 = std::max(x2, n.bbox->right());
        y2 = std::max(y2, n.bbox->bottom());
        std::erase_if(meta.attributes, [&](const auto& kv) {
          auto it = n.attributes.find(kv.first);
          return it == n.attributes.end() || it->second != kv.second;
        });
        meta.merged_count += n.merged_count;
        remap[n.id] = meta.id;
        consumed[idx] = true;
      }
      meta.bbox = BBox{x1, y1, x2 - x1, y2 - y1};
      out_nodes.push_back(std::move(meta));
    }
  }
  if (remap.empty()) return g;

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!consumed[i]) out_nodes.push_back(nodes[i]);
  }
  auto mapped = [&](const std::string& id) -> const std::string& {
    auto it = remap.find(id);
    return it == remap.end() ? id : it->second;
  };
  std::map<std::pair<std::string, std::string>, std::vector<Predicate>> grouped;
  for (const auto& e : g.edges()) {
    const std::string& s = mapped(e.source);
    const std::string& t = mapped(e.target);
    if (s == t) continue;  // intra-group relation
    auto& preds = grouped[{s, t}];
    for (const auto& p : e.predicates) add_predicate(preds, p);
  }
  std::vector<Edge> edges;
  for (auto& [key, preds] : grouped) edges.push_back({key.first, key.second, std::move(preds)});
  return SceneGraph(g.image_id(), g.width(), g.height(), std::move(out_nodes), std::move(edges));
}

// ---- verification --------------------------------------------------------------

nlohmann::json VerificationRequest::to_json() const {
  auto box = [](const BBox& b) {
    return nlohmann::json::array({canonical_number(b.x), canonical_number(b.y),
                                  canonical_number(b.w), canonical_number(b.h)});
  };
  return {{"image", image},
          {"subject_bbox", box(subject_bbox)},
          {"object_bbox", box(object_bbox)},
          {"predicate", predicate}};
}

VerificationRequest build_relation_verification_request(const std::string& image_ref,
                                                        const SceneGraph& g,
                                                        const RelationCandidate& candidate) {
  const Node* s = g.find_node(candidate.source);
  const Node* o = g.find_node(candidate.target);
  if (!s || !o) throw InputError("verification: unknown endpoint in " + candidate.describe());
  if (!s->bbox || !o->bbox) throw InputError("verification: endpoint without bbox in " + candidate.describe());
  VerificationRequest req;
  req.image = image_ref;
  req.subject_bbox = *s->bbox;
  req.object_bbox = *o->bbox;
  req.predicate = candidate.predicate;
  return req;
}

VerificationAnswer parse_verification_answer(std::string_view response) {
  auto doc = extract_trailing_json(response);
  if (!doc || !doc->is_object()) throw ParseError("verification response is not a JSON object");
  auto it = doc->find("answer");
  if (it == doc->end() || !it->is_string()) throw ParseError("verification response lacks string key 'answer'");
  const std::string v = to_lower(trim(it->get<std::string>()));
  if (v == "yes") return VerificationAnswer::yes;
  if (v == "no") return VerificationAnswer::no;
  throw ParseError("verification answer must be Yes or No, got '" + it->get<std::string>() + "'");
}

std::vector<RelationCandidate> apply_verification(
    const std::vector<RelationCandidate>& candidates,
    const std::map<RelationCandidate, VerificationAnswer>& answers) {
  std::vector<RelationCandidate> out;
  for (const auto& c : candidates) {
    auto it = answers.find(c);
    if (it == answers.end()) throw InputError("verification: no answer for candidate " + c.describe());
    if (it->second == VerificationAnswer::yes) out.push_back(c);
  }
  return out;
}

}  // namespace xtc

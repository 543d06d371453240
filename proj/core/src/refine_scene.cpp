#include "xtc/error.hpp"
#include "xtc/model_client.hpp"
#include "xtc/refine.hpp"

namespace xtc {

RawScene raw_scene_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("raw scene: expected an object");
  for (const auto& [k, _] : doc.items()) {
    if (k != "schema" && k != "graph" && k != "relations") throw SchemaError("raw scene: unknown field '" + k + "'");
  }
  if (doc.contains("schema") && doc.at("schema") != "xtc-raw/1") throw SchemaError("raw scene: unsupported schema");
  if (!doc.contains("graph")) throw SchemaError("raw scene: missing 'graph'");
  RawScene raw{scene_graph_from_json(doc.at("graph")), {}};
  try {
    for (const auto& r : doc.value("relations", nlohmann::json::array())) {
      RawRelationPrediction p{r.at("source").get<std::string>(), r.at("target").get<std::string>(),
                              r.at("scores").get<std::map<std::string, double>>()};
      p.validate();
      if (!raw.graph.find_node(p.source) || !raw.graph.find_node(p.target)) {
        throw InvariantError(raw.graph.find_node(p.source) ? p.target : p.source,
                             "relation prediction names a node absent from the graph");
      }
      raw.relations.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("raw scene relations: ") + e.what());
  }
  return raw;
}

nlohmann::ordered_json to_json(const RawScene& raw) {
  nlohmann::ordered_json j;
  j["schema"] = "xtc-raw/1";
  j["graph"] = nlohmann::ordered_json::parse(serialize_scene_graph(raw.graph));
  auto& rel = j["relations"] = nlohmann::ordered_json::array();
  for (const auto& r : raw.relations) {
    rel.push_back({{"source", r.source}, {"target", r.target}, {"scores", r.scores}});
  }
  return j;
}

RelationVerifier chat_relation_verifier(ChatClient& chat, const std::string& image_ref, const SceneGraph& g) {
  return [&chat, image_ref, &g](const RelationCandidate& c) {
    const auto req = build_relation_verification_request(image_ref, g, c);
    return parse_verification_answer(chat.chat({req.prompt + "\n" + req.to_json().dump(), {image_ref}, true}));
  };
}

SceneGraph refine_scene(const RawScene& raw, const RefineConfig& cfg, const RelationVerifier& verify) {
  cfg.validate();
  auto candidates = enforce_exclusive_predicates(filter_relations(raw.relations, cfg), cfg);
  if (verify) {
    std::map<RelationCandidate, VerificationAnswer> answers;
    for (const auto& c : candidates) answers.emplace(c, verify(c));
    candidates = apply_verification(candidates, answers);
  }
  return merge_overlapping_instances(attach_relations(raw.graph, candidates), cfg);
}

}  // namespace xtc

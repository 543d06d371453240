#include "xtc/dataset_stats.hpp"

#include <fmt/format.h>

#include "xtc/error.hpp"

namespace xtc {

StatsRow dataset_stats(std::span<const SceneGraph> graphs, std::string dataset_name) {
  if (graphs.empty()) throw InputError("dataset_stats: no graphs given");
  std::size_t objects = 0, predicates = 0, attributes = 0;
  std::size_t retrieval = 0, attr_queries = 0, rel_queries = 0;
  for (const auto& g : graphs) {
    objects += g.nodes().size();
    for (const auto& n : g.nodes()) {
      attributes += n.attributes.size();
      if (!n.attributes.empty()) ++retrieval;
    }
    for (const auto& e : g.edges()) predicates += e.predicates.size();
    rel_queries += g.edges().size();
  }
  attr_queries = attributes;

  StatsRow row;
  row.dataset = std::move(dataset_name);
  row.total_images = graphs.size();
  row.total_facts = retrieval + attr_queries + rel_queries;
  const double n = static_cast<double>(graphs.size());
  row.avg_objects = static_cast<double>(objects) / n;
  row.avg_relations = static_cast<double>(predicates) / n;
  row.avg_attributes = static_cast<double>(attributes) / n;
  if (row.total_facts > 0) {
    const double f = static_cast<double>(row.total_facts);
    row.pct_object_retrieval = 100.0 * static_cast<double>(retrieval) / f;
    row.pct_attribute_query = 100.0 * static_cast<double>(attr_queries) / f;
    row.pct_relation_query = 100.0 * static_cast<double>(rel_queries) / f;
  }
  return row;
}

const std::vector<std::string>& stats_columns() {
  static const std::vector<std::string> cols = {
      "Dataset",       "Total Images",  "Total Facts (|F|)", "Avg. Obj/Img",  "Avg. Rel/Img",
      "Avg. Attr/Img", "% Obj. Retr.", "% Attr. Query",     "% Rel. Query"};
  return cols;
}

nlohmann::ordered_json to_json(const StatsRow& row) {
  const auto& c = stats_columns();
  nlohmann::ordered_json j;
  j[c[0]] = row.dataset;
  j[c[1]] = row.total_images;
  j[c[2]] = row.total_facts;
  j[c[3]] = row.avg_objects;
  j[c[4]] = row.avg_relations;
  j[c[5]] = row.avg_attributes;
  j[c[6]] = row.pct_object_retrieval;
  j[c[7]] = row.pct_attribute_query;
  j[c[8]] = row.pct_relation_query;
  return j;
}

std::string stats_csv(const StatsRow& row) {
  std::string out;
  const auto& c = stats_columns();
  for (std::size_t i = 0; i < c.size(); ++i) out += (i ? "," : "") + c[i];
  out += '\n';
  out += fmt::format("{},{},{},{:.2f},{:.2f},{:.2f},{:.1f}%,{:.1f}%,{:.1f}%\n", row.dataset,
                     row.total_images, row.total_facts, row.avg_objects, row.avg_relations,
                     row.avg_attributes, row.pct_object_retrieval, row.pct_attribute_query,
                     row.pct_relation_query);
  return out;
}

}  // namespace xtc

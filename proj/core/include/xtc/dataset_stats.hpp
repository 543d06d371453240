#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <string>

#include "xtc/scene_graph.hpp"

namespace xtc {

/// One row of the dataset-statistics table.
///
/// `total_facts` counts derivable queries: one attribute query per attribute, one
/// relation query per edge record, one object retrieval per attribute-bearing node.
/// The three percentages split `total_facts` by query kind.
struct StatsRow {
  std::string dataset;
  std::size_t total_images = 0;
  std::size_t total_facts = 0;
  double avg_objects = 0.0;
  double avg_relations = 0.0;  // relation predicates per image
  double avg_attributes = 0.0;
  double pct_object_retrieval = 0.0;
  double pct_attribute_query = 0.0;
  double pct_relation_query = 0.0;
};

/// Throws InputError on an empty list.
StatsRow dataset_stats(std::span<const SceneGraph> graphs, std::string dataset_name = "dataset");

/// Column headers, in table order.
const std::vector<std::string>& stats_columns();
nlohmann::ordered_json to_json(const StatsRow& row);
/// Header line plus one formatted data line, comma separated.
std::string stats_csv(const StatsRow& row);

}  // namespace xtc

#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xtc/facts.hpp"
#include "xtc/graph_match.hpp"

namespace xtc {

struct FactScorePair {
  std::string fact_id;
  FactKind kind = FactKind::attribute;
  double g_norm = 0.0;
  double u_norm = 0.0;
  double weight = 1.0;
  bool matched = true;
};

/// Mean g_norm over all pairs, or over matched pairs only. Throws InputError when
/// the selection is empty.
double generation_score(std::span<const FactScorePair> pairs, bool matched_only);
double understanding_score(std::span<const FactScorePair> pairs);
/// sum w (1 - |g - u|) / sum w. Throws InputError for zero total weight.
double ccta(std::span<const FactScorePair> pairs);
/// sum w (1 - |g - u|) (g + u) / 2 / sum w.
double aw_ccta(std::span<const FactScorePair> pairs);

/// One ground-truth fact of one image with whatever scores the run produced.
/// Unmatched facts carry g_raw = 0.
struct FactRecord {
  std::string image_id;
  std::string fact_id;
  FactKind kind = FactKind::attribute;
  std::string subject;
  std::string object;  // relations only
  std::string key;     // attribute key, or "p1|p2" for relations
  bool matched = false;
  std::optional<int> g_raw;
  std::optional<int> u_raw;
  double weight = 1.0;

  bool operator==(const FactRecord&) const = default;
};

nlohmann::ordered_json to_json(const FactRecord& r);
FactRecord fact_record_from_json(const nlohmann::json& j);

struct GenerationBreakdown {
  std::optional<double> overall, matched, attr, rel, matched_attr, matched_rel;
};

struct UnderstandingBreakdown {
  std::optional<double> overall, object_retrieval, attr, rel, matched_attr, matched_rel;
};

struct AgreementBreakdown {
  std::optional<double> overall, attributes, relations;
};

/// Per attribute dimension / relation category.
struct DimensionRow {
  std::string group;  // "attribute" or "relation"
  std::string dimension;
  std::size_t facts = 0;
  std::optional<double> g, u;
  std::optional<double> imbalance() const;  // g - u
};

struct MetricsReport {
  std::string model_id;
  std::string family;
  std::size_t image_count = 0;
  std::size_t gt_node_count = 0;
  std::size_t matched_node_count = 0;
  std::size_t shared_fact_count = 0;
  double matched_node_fraction = 1.0;
  GenerationBreakdown generation;
  UnderstandingBreakdown understanding;
  AgreementBreakdown ccta;
  AgreementBreakdown aw_ccta;
  std::vector<DimensionRow> dimensions;
};

/// G uses attribute and relation facts (unmatched pinned to 0, or matched only);
/// U uses every fact with an understanding score; CCTA uses attribute and relation
/// facts carrying both. Throws InputError on duplicate fact ids, on records whose
/// image has no match result, or when a record's matched flag contradicts the match.
MetricsReport build_report(std::span<const FactRecord> records, std::span<const MatchResult> matches,
                           const std::string& model_id, const std::string& family);

struct FamilyRow {
  std::string family;
  std::size_t models = 0;
  std::optional<double> mean_g, mean_u, mean_ccta, mean_aw_ccta;
  std::optional<double> gap() const;  // mean_g - mean_u
};

/// One row per family tag, sorted by tag.
std::vector<FamilyRow> aggregate_families(std::span<const MetricsReport> reports);

nlohmann::ordered_json to_json(const MetricsReport& r);
nlohmann::ordered_json to_json(const FamilyRow& r);

const std::vector<std::string>& generation_columns();
const std::vector<std::string>& understanding_columns();
const std::vector<std::string>& ccta_columns();
const std::vector<std::string>& family_columns();
const std::vector<std::string>& tornado_columns();

std::string generation_table_csv(std::span<const MetricsReport> reports);
std::string understanding_table_csv(std::span<const MetricsReport> reports);
std::string ccta_table_csv(std::span<const MetricsReport> reports);
std::string family_table_csv(std::span<const FamilyRow> rows);
std::string tornado_csv(std::span<const MetricsReport> reports);

}  // namespace xtc

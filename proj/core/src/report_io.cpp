#include <fmt/format.h>

#include "xtc/error.hpp"
#include "xtc/metrics.hpp"

namespace xtc {

nlohmann::ordered_json to_json(const FactRecord& r) {
  nlohmann::ordered_json j;
  j["image_id"] = r.image_id;
  j["fact_id"] = r.fact_id;
  j["kind"] = std::string(to_string(r.kind));
  j["subject"] = r.subject;
  if (r.kind == FactKind::relation) j["object"] = r.object;
  j["key"] = r.key;
  j["matched"] = r.matched;
  j["g_raw"] = r.g_raw ? nlohmann::ordered_json(*r.g_raw) : nlohmann::ordered_json();
  j["u_raw"] = r.u_raw ? nlohmann::ordered_json(*r.u_raw) : nlohmann::ordered_json();
  j["weight"] = canonical_number(r.weight);
  return j;
}

FactRecord fact_record_from_json(const nlohmann::json& j) {
  try {
    FactRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.fact_id = j.at("fact_id").get<std::string>();
    r.kind = fact_kind_from_string(j.at("kind").get<std::string>());
    r.subject = j.at("subject").get<std::string>();
    if (j.contains("object")) r.object = j.at("object").get<std::string>();
    r.key = j.at("key").get<std::string>();
    r.matched = j.at("matched").get<bool>();
    if (!j.at("g_raw").is_null()) r.g_raw = j.at("g_raw").get<int>();
    if (!j.at("u_raw").is_null()) r.u_raw = j.at("u_raw").get<int>();
    r.weight = j.value("weight", 1.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("fact record: ") + e.what());
  }
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string(); }

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += quote(cells[i]);
  }
  return out + "\n";
}

std::vector<std::optional<double>> generation_row(const MetricsReport& r) {
  const auto& g = r.generation;
  return {g.overall, r.matched_node_fraction, g.attr, g.rel, g.matched_attr, g.matched_rel};
}

std::vector<std::optional<double>> understanding_row(const MetricsReport& r) {
  const auto& u = r.understanding;
  return {u.overall, u.object_retrieval, u.attr, u.rel, u.matched_attr, u.matched_rel};
}

std::vector<std::optional<double>> ccta_row(const MetricsReport& r) {
  return {r.ccta.overall, r.ccta.attributes, r.ccta.relations,
          r.aw_ccta.overall, r.aw_ccta.attributes, r.aw_ccta.relations};
}

std::vector<std::optional<double>> family_row(const FamilyRow& f) {
  return {f.mean_g, f.mean_u, f.gap(), f.mean_ccta, f.mean_aw_ccta};
}

nlohmann::ordered_json table_object(const std::vector<std::string>& cols, const std::string& name,
                                    const std::vector<std::optional<double>>& values) {
  nlohmann::ordered_json j;
  j[cols[0]] = name;
  for (std::size_t i = 0; i < values.size(); ++i) j[cols[i + 1]] = opt(values[i]);
  return j;
}

template <typename T, typename RowFn, typename NameFn>
std::string table_csv(const std::vector<std::string>& cols, std::span<const T> rows, RowFn row, NameFn name) {
  std::string out = csv_line(cols);
  for (const auto& r : rows) {
    std::vector<std::string> cells{name(r)};
    for (const auto& v : row(r)) cells.push_back(cell(v));
    out += csv_line(cells);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& generation_columns() {
  static const std::vector<std::string> c{"Model", "Overall Gen.", "Matched Nodes", "Attr.", "Rel.",
                                          "Matched Attr.", "Matched Rel."};
  return c;
}

const std::vector<std::string>& understanding_columns() {
  static const std::vector<std::string> c{"Model", "Overall Und.", "Obj. Retr.", "Attr. Query", "Rel. Query",
                                          "Matched Attr.", "Matched Rel."};
  return c;
}

const std::vector<std::string>& ccta_columns() {
  static const std::vector<std::string> c{"Model", "CCTA Overall", "CCTA Attributes", "CCTA Relations",
                                          "AW-CCTA Overall", "AW-CCTA Attributes", "AW-CCTA Relations"};
  return c;
}

const std::vector<std::string>& family_columns() {
  static const std::vector<std::string> c{"Family", "Mean G", "Mean U", "G–U Gap", "Mean CCTA",
                                          "Mean AW-CCTA"};
  return c;
}

const std::vector<std::string>& tornado_columns() {
  static const std::vector<std::string> c{"Model", "Group", "Dimension", "Facts", "G", "U", "Imbalance"};
  return c;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["model_id"] = r.model_id;
  j["family"] = r.family;
  j["image_count"] = r.image_count;
  j["gt_node_count"] = r.gt_node_count;
  j["matched_node_count"] = r.matched_node_count;
  j["matched_node_fraction"] = r.matched_node_fraction;
  j["shared_fact_count"] = r.shared_fact_count;
  j["G_overall"] = opt(r.generation.overall);
  j["G_matched"] = opt(r.generation.matched);
  j["U_overall"] = opt(r.understanding.overall);
  j["CCTA_overall"] = opt(r.ccta.overall);
  j["CCTA_attr"] = opt(r.ccta.attributes);
  j["CCTA_rel"] = opt(r.ccta.relations);
  j["AW_CCTA_overall"] = opt(r.aw_ccta.overall);
  j["AW_CCTA_attr"] = opt(r.aw_ccta.attributes);
  j["AW_CCTA_rel"] = opt(r.aw_ccta.relations);
  auto& tables = j["tables"];
  tables["generation"] = table_object(generation_columns(), r.model_id, generation_row(r));
  tables["understanding"] = table_object(understanding_columns(), r.model_id, understanding_row(r));
  tables["ccta"] = table_object(ccta_columns(), r.model_id, ccta_row(r));
  auto& dims = j["dimensions"] = nlohmann::ordered_json::array();
  for (const auto& d : r.dimensions) {
    dims.push_back({{"group", d.group}, {"dimension", d.dimension}, {"facts", d.facts}, {"G", opt(d.g)},
                    {"U", opt(d.u)}, {"imbalance", opt(d.imbalance())}});
  }
  return j;
}

nlohmann::ordered_json to_json(const FamilyRow& r) {
  auto j = table_object(family_columns(), r.family, family_row(r));
  j["models"] = r.models;
  return j;
}

std::string generation_table_csv(std::span<const MetricsReport> reports) {
  return table_csv(generation_columns(), reports, generation_row, [](const MetricsReport& r) { return r.model_id; });
}

std::string understanding_table_csv(std::span<const MetricsReport> reports) {
  return table_csv(understanding_columns(), reports, understanding_row,
                   [](const MetricsReport& r) { return r.model_id; });
}

std::string ccta_table_csv(std::span<const MetricsReport> reports) {
  return table_csv(ccta_columns(), reports, ccta_row, [](const MetricsReport& r) { return r.model_id; });
}

std::string family_table_csv(std::span<const FamilyRow> rows) {
  return table_csv(family_columns(), rows, family_row, [](const FamilyRow& f) { return f.family; });
}

std::string tornado_csv(std::span<const MetricsReport> reports) {
  std::string out = csv_line(tornado_columns());
  for (const auto& r : reports) {
    for (const auto& d : r.dimensions) {
      out += csv_line({r.model_id, d.group, d.dimension, std::to_string(d.facts), cell(d.g), cell(d.u),
                       cell(d.imbalance())});
    }
  }
  return out;
}

}  // namespace xtc

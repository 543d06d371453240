#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "xtc/clients.hpp"
#include "xtc/error.hpp"
#include "xtc/metrics.hpp"

using namespace xtc;
using namespace xtc::testing;

namespace {

std::vector<FactScorePair> pairs(std::initializer_list<std::pair<double, double>> gu) {
  std::vector<FactScorePair> out;
  int i = 0;
  for (auto [g, u] : gu) out.push_back({"f" + std::to_string(i++), FactKind::attribute, g, u, 1.0, true});
  return out;
}

FactRecord rec(std::string image, std::string id, FactKind kind, std::string subject, std::string key,
               std::optional<int> g, std::optional<int> u, bool matched = true, std::string object = "") {
  FactRecord r;
  r.image_id = std::move(image);
  r.fact_id = std::move(id);
  r.kind = kind;
  r.subject = std::move(subject);
  r.object = std::move(object);
  r.key = std::move(key);
  r.matched = matched;
  r.g_raw = g;
  r.u_raw = u;
  return r;
}

MatchResult match_of(std::string image, std::size_t gt_nodes, std::vector<std::pair<std::string, std::string>> m) {
  MatchResult r;
  r.gt_image_id = std::move(image);
  r.pred_image_id = r.gt_image_id;
  r.gt_node_count = gt_nodes;
  for (auto& [g, p] : m) r.node_pairs.push_back({g, p, 1.0, 1.0, 0.0});
  return r;
}

}  // namespace

TEST(Scores, GenerationAndUnderstanding) {
  auto p = pairs({{1, 0}, {0.8, 0}, {0, 0.2}, {0.6, 0.4}});
  EXPECT_NEAR(generation_score(p, false), 0.6, 1e-12);
  p[2].matched = false;
  EXPECT_NEAR(generation_score(p, true), 0.8, 1e-12);
  EXPECT_NEAR(understanding_score(std::vector<FactScorePair>(p.begin() + 2, p.end())), 0.3, 1e-12);
  EXPECT_THROW(generation_score({}, false), InputError);
  EXPECT_THROW(understanding_score({}), InputError);
  for (auto& q : p) q.matched = false;
  EXPECT_THROW(generation_score(p, true), InputError);
}

TEST(Scores, AgreementHandValues) {
  const auto p = pairs({{0.8, 0.6}, {1.0, 1.0}, {0.2, 0.5}});
  // (0.8 + 1.0 + 0.7) / 3 and (0.8*0.7 + 1.0*1.0 + 0.7*0.35) / 3
  EXPECT_NEAR(ccta(p), 2.5 / 3, 1e-12);
  EXPECT_NEAR(aw_ccta(p), (0.56 + 1.0 + 0.245) / 3, 1e-12);
  EXPECT_DOUBLE_EQ(ccta(pairs({{1, 0}})), 0.0);
  EXPECT_DOUBLE_EQ(ccta(pairs({{0, 0}, {0, 0}})), 1.0);
  EXPECT_DOUBLE_EQ(aw_ccta(pairs({{0, 0}, {0, 0}})), 0.0);
  EXPECT_DOUBLE_EQ(aw_ccta(pairs({{1, 1}})), 1.0);
  auto z = pairs({{1, 1}});
  z[0].weight = 0;
  EXPECT_THROW(ccta(z), InputError);
  EXPECT_THROW(ccta(pairs({{1.2, 1}})), InvariantError);
}

TEST(Scores, WeightSplitAndPermutation) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<FactScorePair> p;
  for (int i = 0; i < 20; ++i) p.push_back({"f" + std::to_string(i), FactKind::relation, u(rng), u(rng), u(rng) + 0.1, true});
  std::vector<FactScorePair> split;
  for (const auto& q : p) {
    auto a = q, b = q;
    a.weight = b.weight = q.weight / 2;
    split.push_back(a);
    split.push_back(b);
  }
  std::shuffle(split.begin(), split.end(), rng);
  EXPECT_NEAR(ccta(p), ccta(split), 1e-12);
  EXPECT_NEAR(aw_ccta(p), aw_ccta(split), 1e-12);
  EXPECT_LE(aw_ccta(p), ccta(p));
}

TEST(BuildReport, BreakdownsAndDenominators) {
  const std::vector<MatchResult> m{match_of("img", 3, {{"a", "x"}, {"b", "y"}})};
  const std::vector<FactRecord> r{
      rec("img", "o1", FactKind::object, "a", "", std::nullopt, 5),
      rec("img", "a1", FactKind::attribute, "a", "primary color", 5, 4),
      rec("img", "a2", FactKind::attribute, "c", "primary color", 0, 1, false),
      rec("img", "r1", FactKind::relation, "a", "on", 3, 3, true, "b"),
      rec("img", "r2", FactKind::relation, "a", "holding", 0, std::nullopt, false, "c"),
  };
  const auto rep = build_report(r, m, "m1", "fam");
  EXPECT_DOUBLE_EQ(rep.matched_node_fraction, 2.0 / 3);
  EXPECT_EQ(rep.gt_node_count, 3u);
  EXPECT_NEAR(*rep.generation.overall, (1.0 + 0 + 0.6 + 0) / 4, 1e-12);
  EXPECT_NEAR(*rep.generation.matched, (1.0 + 0.6) / 2, 1e-12);
  EXPECT_NEAR(*rep.generation.attr, 0.5, 1e-12);
  EXPECT_NEAR(*rep.generation.matched_attr, 1.0, 1e-12);
  EXPECT_NEAR(*rep.generation.rel, 0.3, 1e-12);
  EXPECT_NEAR(*rep.understanding.overall, (1.0 + 0.8 + 0.2 + 0.6) / 4, 1e-12);
  EXPECT_NEAR(*rep.understanding.object_retrieval, 1.0, 1e-12);
  EXPECT_NEAR(*rep.understanding.matched_attr, 0.8, 1e-12);
  // shared: a1 (1,0.8), a2 (0,0.2), r1 (0.6,0.6)
  EXPECT_EQ(rep.shared_fact_count, 3u);
  EXPECT_NEAR(*rep.ccta.overall, (0.8 + 0.8 + 1.0) / 3, 1e-12);
  EXPECT_NEAR(*rep.aw_ccta.relations, 0.6, 1e-12);
  EXPECT_NEAR(*rep.ccta.attributes, 0.8, 1e-12);
  ASSERT_FALSE(rep.dimensions.empty());
  for (const auto& d : rep.dimensions) {
    if (d.imbalance()) EXPECT_NEAR(*d.imbalance(), *d.g - *d.u, 1e-15);
  }
}

TEST(BuildReport, ConsistencyErrors) {
  const std::vector<MatchResult> m{match_of("img", 2, {{"a", "x"}})};
  const auto ok = rec("img", "a1", FactKind::attribute, "a", "primary color", 5, 5);
  EXPECT_NO_THROW(build_report(std::vector<FactRecord>{ok}, m, "m", "f"));
  EXPECT_THROW(build_report(std::vector<FactRecord>{ok, ok}, m, "m", "f"), InputError);
  auto lie = ok;
  lie.matched = false;
  EXPECT_THROW(build_report(std::vector<FactRecord>{lie}, m, "m", "f"), InputError);
  auto stray = ok;
  stray.image_id = "other";
  EXPECT_THROW(build_report(std::vector<FactRecord>{stray}, m, "m", "f"), InputError);
  auto scored = rec("img", "b1", FactKind::attribute, "b", "primary color", 2, 5, false);
  EXPECT_THROW(build_report(std::vector<FactRecord>{scored}, m, "m", "f"), InputError);
  const std::vector<MatchResult> twice{m[0], m[0]};
  EXPECT_THROW(build_report(std::vector<FactRecord>{ok}, twice, "m", "f"), InputError);
}

TEST(BuildReport, AllZeroScores) {
  const std::vector<MatchResult> m{match_of("img", 1, {{"a", "x"}})};
  const std::vector<FactRecord> r{rec("img", "a1", FactKind::attribute, "a", "primary color", 0, 0)};
  const auto rep = build_report(r, m, "m", "f");
  EXPECT_EQ(*rep.generation.overall, 0.0);
  EXPECT_EQ(*rep.understanding.overall, 0.0);
  EXPECT_EQ(*rep.ccta.overall, 1.0);
  EXPECT_EQ(*rep.aw_ccta.overall, 0.0);
  EXPECT_FALSE(rep.ccta.relations.has_value());
}

TEST(Families, MeansAndGap) {
  MetricsReport a, b, c;
  a.family = b.family = "AR";
  c.family = "Diffusion";
  a.generation.overall = 0.4;
  b.generation.overall = 0.6;
  a.understanding.overall = 0.6;
  b.understanding.overall = 0.8;
  c.generation.overall = 0.1;
  const std::vector<MetricsReport> reps{c, a, b};
  const auto rows = aggregate_families(reps);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].family, "AR");
  EXPECT_EQ(rows[0].models, 2u);
  EXPECT_NEAR(*rows[0].mean_g, 0.5, 1e-12);
  EXPECT_NEAR(*rows[0].mean_u, 0.7, 1e-12);
  EXPECT_NEAR(*rows[0].gap(), -0.2, 1e-12);
  EXPECT_FALSE(rows[1].gap().has_value());
  EXPECT_FALSE(rows[1].mean_ccta.has_value());
}

TEST(Tables, HeadersAndCells) {
  MetricsReport r;
  r.model_id = "mock, v1";
  r.matched_node_fraction = 0.5;
  r.generation.overall = 0.25;
  const std::vector<MetricsReport> reps{r};
  const std::string g = generation_table_csv(reps);
  EXPECT_EQ(g,
            "Model,Overall Gen.,Matched Nodes,Attr.,Rel.,Matched Attr.,Matched Rel.\n"
            "\"mock, v1\",0.2500,0.5000,,,,\n");
  EXPECT_EQ(understanding_table_csv(reps).substr(0, understanding_table_csv(reps).find('\n')),
            "Model,Overall Und.,Obj. Retr.,Attr. Query,Rel. Query,Matched Attr.,Matched Rel.");
  EXPECT_EQ(ccta_table_csv(reps).substr(0, ccta_table_csv(reps).find('\n')),
            "Model,CCTA Overall,CCTA Attributes,CCTA Relations,AW-CCTA Overall,AW-CCTA Attributes,AW-CCTA Relations");
  EXPECT_EQ(tornado_columns().size(), 7u);
  const auto j = to_json(r);
  EXPECT_EQ(j.begin().key(), "model_id");
  EXPECT_TRUE(j["U_overall"].is_null());
}

TEST(FactRecordJson, RoundTrip) {
  const auto a = rec("img", "r1", FactKind::relation, "a", "on|near", 3, std::nullopt, true, "b");
  EXPECT_EQ(fact_record_from_json(nlohmann::json::parse(to_json(a).dump())), a);
  const auto o = rec("img", "o1", FactKind::object, "a", "", std::nullopt, 2);
  const auto j = to_json(o);
  EXPECT_FALSE(j.contains("object"));
  EXPECT_EQ(fact_record_from_json(nlohmann::json::parse(j.dump())), o);
  EXPECT_THROW(fact_record_from_json(nlohmann::json::object()), SchemaError);
}

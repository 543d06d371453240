#include <gtest/gtest.h>

#include "test_support.hpp"
#include "xtc/pipeline.hpp"

using namespace xtc;
using namespace xtc::testing;
namespace fs = std::filesystem;

namespace {

RunConfig mock_config() {
  RunConfig c;
  c.mock = true;
  c.model_id = "mock-umm";
  c.family = "mock";
  return c;
}

// relative path -> bytes, for every file of the report bundle
std::map<std::string, std::string> bundle(const RunStore& s) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(s.report_dir())) {
    if (e.is_regular_file()) out[fs::relative(e.path(), s.report_dir()).string()] = read_file(e.path());
  }
  return out;
}

struct Run {
  RunStore store;
  RunSummary summary;
  MetricsReport report;
};

Run full_run(const RunConfig& c, const fs::path& runs, const fs::path& graphs, int jobs = 1) {
  PipelineOptions o;
  o.runs_dir = runs;
  o.jobs = jobs;
  RunStore s = init_run(c, graphs, o);
  auto sum = run_stages(s, all_stages(), o);
  auto rep = write_report(s);
  return {std::move(s), sum, rep};
}

}  // namespace

TEST(Pipeline, IdentityMockScoresPerfectly) {
  TempDir dir;
  auto r = full_run(mock_config(), dir / "runs", fixtures_dir() / "graphs");
  EXPECT_EQ(r.summary.exit_code(), 0);
  EXPECT_EQ(r.summary.images, 3u);
  EXPECT_EQ(r.report.image_count, 3u);
  EXPECT_DOUBLE_EQ(r.report.matched_node_fraction, 1.0);
  EXPECT_DOUBLE_EQ(*r.report.generation.overall, 1.0);
  EXPECT_DOUBLE_EQ(*r.report.understanding.overall, 1.0);
  EXPECT_DOUBLE_EQ(*r.report.ccta.overall, 1.0);
  EXPECT_DOUBLE_EQ(*r.report.aw_ccta.overall, 1.0);
  EXPECT_EQ(r.summary.run_id.rfind("run-", 0), 0u);
  EXPECT_EQ(r.summary.run_id.size(), 16u);
  const auto b = bundle(r.store);
  for (const char* f : {"report.json", "generation.csv", "understanding.csv", "ccta.csv", "family.csv", "tornado.csv",
                        "facts.jsonl"}) {
    EXPECT_TRUE(b.contains(f)) << f;
  }
  const auto rep = nlohmann::json::parse(b.at("report.json"));
  EXPECT_EQ(rep["schema"], "xtc-report/1");
  EXPECT_EQ(rep["run_id"], r.summary.run_id);
}

TEST(Pipeline, DeterministicAcrossRunsAndJobs) {
  TempDir a, b;
  auto r1 = full_run(mock_config(), a / "runs", fixtures_dir() / "graphs", 1);
  auto r2 = full_run(mock_config(), b / "runs", fixtures_dir() / "graphs", 3);
  EXPECT_EQ(r1.summary.run_id, r2.summary.run_id);
  EXPECT_EQ(bundle(r1.store), bundle(r2.store));
  EXPECT_EQ(read_file(r1.store.root() / "manifest.json"), read_file(r2.store.root() / "manifest.json"));
}

TEST(Pipeline, ChainedStagesEqualSinglePass) {
  TempDir a, b;
  auto whole = full_run(mock_config(), a / "runs", fixtures_dir() / "graphs");
  PipelineOptions o;
  o.runs_dir = b / "runs";
  for (const auto* set : {&refine_stages(), &qagen_stages(), &match_stages(), &score_stages()}) {
    RunStore s = init_run(mock_config(), fixtures_dir() / "graphs", o);
    run_stages(s, *set, o);
  }
  RunStore s = RunStore::open(o.runs_dir, whole.summary.run_id);
  write_report(s);
  EXPECT_EQ(bundle(whole.store), bundle(s));
}

TEST(Pipeline, ResumeAfterKillMatchesUninterrupted) {
  TempDir a, b;
  auto whole = full_run(mock_config(), a / "runs", fixtures_dir() / "graphs");
  PipelineOptions o;
  o.runs_dir = b / "runs";
  o.stop_after_stages = 7;
  RunStore s = init_run(mock_config(), fixtures_dir() / "graphs", o);
  const auto first = run_stages(s, all_stages(), o);
  EXPECT_TRUE(first.stopped);
  EXPECT_EQ(first.stages_completed, 7u);
  o.stop_after_stages.reset();
  RunStore again = init_run(mock_config(), fixtures_dir() / "graphs", o);
  const auto second = run_stages(again, all_stages(), o);
  EXPECT_FALSE(second.stopped);
  EXPECT_EQ(second.stages_completed, 3u * all_stages().size() - 7u);
  write_report(again);
  EXPECT_EQ(bundle(whole.store), bundle(again));
}

TEST(Pipeline, FailingItemsAreQuarantined) {
  TempDir dir;
  RunConfig c = mock_config();
  c.extractor = "fixture";
  c.extractor_dir = (fixtures_dir() / "pred").string();  // only kitchen has a predicted graph
  auto r = full_run(c, dir / "runs", fixtures_dir() / "graphs");
  EXPECT_EQ(r.summary.quarantined_items, 2u);
  EXPECT_EQ(r.summary.exit_code(), 2);
  EXPECT_EQ(r.report.image_count, 1u);
  EXPECT_DOUBLE_EQ(r.report.matched_node_fraction, 0.8);
  const auto m = r.store.manifest();
  ASSERT_EQ(m.quarantine.size(), 2u);
  EXPECT_EQ(m.quarantine.begin()->stage, "extract");
  const auto rep = nlohmann::json::parse(read_file(r.store.report_dir() / "report.json"));
  EXPECT_EQ(rep["excluded"].size(), 2u);
  EXPECT_LT(*r.report.generation.overall, 1.0);
}

TEST(Pipeline, MissingUpstreamArtifactIsNamed) {
  TempDir dir;
  PipelineOptions o;
  o.runs_dir = dir / "runs";
  RunStore s = init_run(mock_config(), fixtures_dir() / "graphs", o);
  try {
    run_stages(s, score_stages(), o);
    FAIL();
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("missing upstream artifact"), std::string::npos) << msg;
    EXPECT_NE(msg.find("not run"), std::string::npos) << msg;
  }
}

TEST(Pipeline, GenerationCapabilitySkip) {
  TempDir dir;
  RunConfig c = mock_config();
  c.capabilities.generation = false;
  auto r = full_run(c, dir / "runs", fixtures_dir() / "graphs");
  EXPECT_EQ(r.summary.exit_code(), 0);
  EXPECT_DOUBLE_EQ(r.report.matched_node_fraction, 0.0);
  EXPECT_FALSE(r.report.generation.overall.has_value());
  EXPECT_FALSE(r.report.generation.matched.has_value());
  EXPECT_FALSE(r.report.ccta.overall.has_value());
  EXPECT_DOUBLE_EQ(*r.report.understanding.overall, 1.0);
  const auto gen = nlohmann::json::parse(read_file(r.store.generation("kitchen")));
  EXPECT_EQ(gen["skipped"], true);
}

TEST(Pipeline, RawInputsAreRefinedWithVerification) {
  TempDir dir;
  RunConfig c = mock_config();
  c.verify_relations = true;
  auto r = full_run(c, dir / "runs", fixtures_dir() / "raw");
  EXPECT_EQ(r.summary.exit_code(), 0);
  const auto g = parse_scene_graph(read_file(r.store.ref_graph("yard")));
  EXPECT_EQ(g.nodes().size(), 4u);
  EXPECT_EQ(g.find_node("s1")->merged_count, 3);
  EXPECT_TRUE(r.store.manifest().inputs[0].raw);
  EXPECT_DOUBLE_EQ(*r.report.ccta.overall, 1.0);
}

TEST(Pipeline, ConfigStrictness) {
  const auto j = to_json(mock_config());
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
  auto unknown = j;
  unknown["temprature"] = 0;
  EXPECT_THROW(run_config_from_json(unknown), SchemaError);
  auto nested = j;
  nested["cost"]["gamma"] = 1;
  EXPECT_THROW(run_config_from_json(nested), SchemaError);
  auto drift = j;
  drift["templates"]["vqa_judge"] = "000000000000";
  EXPECT_THROW(run_config_from_json(drift), InputError);
  RunConfig live;  // non-mock without clients
  EXPECT_THROW(live.validate(), InputError);
  auto bad_cost = j;
  bad_cost["cost"]["alpha"] = 0.9;
  EXPECT_THROW(run_config_from_json(bad_cost), InputError);
}

TEST(Pipeline, ReopeningWithDifferentConfigFails) {
  TempDir dir;
  PipelineOptions o;
  o.runs_dir = dir / "runs";
  const RunStore s = init_run(mock_config(), fixtures_dir() / "graphs", o);
  RunConfig other = mock_config();
  other.cost = {0.5, 0.5, 0.4, 0.6};
  const RunStore t = init_run(other, fixtures_dir() / "graphs", o);
  EXPECT_NE(s.manifest().run_id, t.manifest().run_id);
  EXPECT_THROW(init_run(other, fixtures_dir() / "graphs", o, s.manifest().run_id), InputError);
  EXPECT_THROW(RunStore::open(o.runs_dir, "run-nope"), InputError);
}

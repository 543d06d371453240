#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "test_support.hpp"
#include "xtc/graph_match.hpp"
#include "xtc/clients.hpp"

using namespace xtc;
using namespace xtc::testing;
namespace fs = std::filesystem;

#ifdef XTC_CLI_PATH

namespace {

struct Result {
  int status = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string("'") + XTC_CLI_PATH + "' " + args + " 2>/dev/null";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

}  // namespace

TEST(Cli, MatchPrintsResultJson) {
  const auto gt = fixtures_dir() / "graphs/kitchen.json";
  const auto pred = fixtures_dir() / "pred/kitchen.json";
  const auto r = run("match --gt " + q(gt) + " --pred " + q(pred));
  ASSERT_EQ(r.status, 0);
  HashingEmbedder emb;
  const auto expect = to_json(match_graphs(parse_scene_graph(read_file(gt)), parse_scene_graph(read_file(pred)), CostParams{}, emb));
  EXPECT_EQ(r.out, expect.dump(2) + "\n");
  EXPECT_EQ(run("match --gt " + q(gt)).status, 1);
  EXPECT_NE(run("match --gt /nonexistent.json --pred " + q(pred)).status, 0);
}

TEST(Cli, StatsCsvAndJson) {
  const auto r = run("stats --graphs " + q(fixtures_dir() / "graphs") + " --name fixtures --format csv");
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("fixtures,3,48,5.00,4.00,7.67,29.2%,47.9%,22.9%"), std::string::npos) << r.out;
  const auto j = run("stats --graphs " + q(fixtures_dir() / "graphs") + " --name fixtures");
  ASSERT_EQ(j.status, 0);
  EXPECT_NO_THROW((void)nlohmann::json::parse(j.out));
  EXPECT_NE(run("stats --graphs " + q(fixtures_dir() / "graphs") + " --format xml").status, 0);
}

TEST(Cli, PipelineEqualsChainedSubcommands) {
  TempDir dir;
  const std::string common = " --mock --graphs " + q(fixtures_dir() / "graphs");
  const auto p = run("pipeline" + common + " --runs-dir " + q(dir / "a"));
  ASSERT_EQ(p.status, 0);
  const std::string id = trimmed(p.out);
  EXPECT_EQ(id.rfind("run-", 0), 0u);

  for (const char* sub : {"refine", "qagen", "match", "score"}) {
    const auto r = run(std::string(sub) + common + " --runs-dir " + q(dir / "b"));
    ASSERT_EQ(r.status, 0) << sub;
    EXPECT_EQ(trimmed(r.out), id) << sub;
  }
  const auto rep = run("report --resume " + id + " --runs-dir " + q(dir / "b"));
  ASSERT_EQ(rep.status, 0);
  EXPECT_EQ(tree(dir / "a" / id / "report"), tree(dir / "b" / id / "report"));
  EXPECT_EQ(read_file(dir / "a" / id / "manifest.json"), read_file(dir / "b" / id / "manifest.json"));

  const auto agg = run("report --aggregate " + id + " --runs-dir " + q(dir / "a") + " --out " + q(dir / "fam"));
  ASSERT_EQ(agg.status, 0);
  EXPECT_TRUE(fs::exists(dir / "fam" / "family.csv"));
  EXPECT_TRUE(fs::exists(dir / "fam" / "family.json"));
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const std::string common = " --mock --graphs " + q(fixtures_dir() / "graphs") + " --runs-dir " + q(dir / "r");
  // score without upstream stages
  EXPECT_EQ(run("score" + common).status, 1);
  // killed mid-run, then resumed
  const auto stopped = run("pipeline" + common + " --stop-after-stages 4");
  EXPECT_EQ(stopped.status, 3);
  const auto resumed = run("pipeline" + common);
  EXPECT_EQ(resumed.status, 0);
  // partial: two images lack a predicted graph
  TempDir cfgdir;
  nlohmann::json cfg{{"mock", true}, {"extractor", "fixture"}, {"extractor_dir", (fixtures_dir() / "pred").string()}};
  write_file_atomic(cfgdir / "cfg.json", cfg.dump());
  EXPECT_EQ(run("pipeline --config " + q(cfgdir / "cfg.json") + " --graphs " + q(fixtures_dir() / "graphs") +
                " --runs-dir " + q(dir / "p"))
                .status,
            2);
  EXPECT_NE(run("frobnicate").status, 0);
  EXPECT_EQ(run("--help").status, 0);
}

TEST(Cli, SingleFileModes) {
  TempDir dir;
  const auto r = run("refine --input " + q(fixtures_dir() / "raw/yard.raw.json"));
  ASSERT_EQ(r.status, 0);
  const auto g = parse_scene_graph(r.out);
  EXPECT_EQ(g.nodes().size(), 4u);
  const auto qa = run("qagen --graph " + q(fixtures_dir() / "graphs/kitchen.json"));
  ASSERT_EQ(qa.status, 0);
  EXPECT_EQ(std::count(qa.out.begin(), qa.out.end(), '\n'), 16);
  const auto pr = run("qagen --prompt --graph " + q(fixtures_dir() / "graphs/street.json"));
  ASSERT_EQ(pr.status, 0);
  EXPECT_NE(pr.out.find("a white side car"), std::string::npos);
  const auto ar = run("refine --input " + q(fixtures_dir() / "graphs/kitchen.json") + " --attribute-requests img:k");
  ASSERT_EQ(ar.status, 0);
  EXPECT_EQ(std::count(ar.out.begin(), ar.out.end(), '\n'), 5);
}

#endif

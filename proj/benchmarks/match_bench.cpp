#include <benchmark/benchmark.h>

#include <random>

#include "xtc/clients.hpp"
#include "xtc/graph_match.hpp"

namespace {

// n nodes over a few labels, each with two attributes and a ring of relations plus chords
xtc::SceneGraph synthetic(std::size_t n, std::uint64_t seed, const std::string& prefix) {
  static const std::vector<std::string> labels{"person", "car", "cup", "dog"};
  static const std::vector<std::string> colors{"red", "blue", "dark red", "white", "green"};
  static const std::vector<std::string> preds{"on", "next to", "holding", "behind"};
  std::mt19937_64 rng(seed);
  std::vector<xtc::Node> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    xtc::Node v;
    v.id = prefix + std::to_string(i);
    v.label = labels[i % labels.size()];
    v.attributes["primary color"] = colors[rng() % colors.size()];
    v.attributes["material type"] = rng() % 2 ? "metal" : "wood";
    nodes.push_back(std::move(v));
  }
  std::vector<xtc::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.push_back({nodes[i].id, nodes[(i + 1) % n].id, {{preds[rng() % preds.size()], std::nullopt}}});
    if (n > 3 && i % 3 == 0) edges.push_back({nodes[i].id, nodes[(i + n / 2) % n].id, {{"near", std::nullopt}}});
  }
  return xtc::SceneGraph("bench", 640, 480, std::move(nodes), std::move(edges));
}

void BM_MatchGraphs(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto gt = synthetic(n, 1, "g");
  const auto pred = synthetic(n, 2, "p");
  xtc::HashingEmbedder emb;
  for (auto _ : state) benchmark::DoNotOptimize(xtc::match_graphs(gt, pred, xtc::CostParams{}, emb).total_cost());
}
BENCHMARK(BM_MatchGraphs)->RangeMultiplier(2)->Range(4, 64)->Unit(benchmark::kMicrosecond);

}  // namespace

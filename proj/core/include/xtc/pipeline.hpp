#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xtc/clients.hpp"
#include "xtc/graph_match.hpp"
#include "xtc/http_clients.hpp"
#include "xtc/judge.hpp"
#include "xtc/metrics.hpp"
#include "xtc/qa_gen.hpp"
#include "xtc/refine.hpp"
#include "xtc/run_store.hpp"

namespace xtc {

/// Everything that determines a run's outputs. The manifest stores its JSON form,
/// which is enough to reproduce a mocked run bit-exactly.
struct RunConfig {
  std::string model_id = "mock-umm";
  std::string family = "unspecified";
  bool mock = false;
  ModelCapabilities capabilities;
  RefineConfig refine;
  bool verify_relations = false;
  CostParams cost;
  PromptStage prompt_stage = PromptStage::sentence_refined;
  bool include_ambiguous = false;
  std::string extractor = "identity";  // identity | fixture | vlm | service
  std::string extractor_dir;           // fixture graphs
  std::string mock_answers = "oracle";  // oracle | none | path to JSONL {image_id, question, answer}
  std::string reference_images;         // directory of <image_id>.{png,jpg,ppm}
  std::optional<ClientConfig> umm, judge, embedder, chat, extractor_service;

  void validate() const;
};

/// Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
/// Snapshot form, including template versions.
nlohmann::json to_json(const RunConfig& c);

/// `*.json` files of a directory in name order; `*.raw.json` ones hold raw scenes.
std::vector<std::filesystem::path> list_graph_inputs(const std::filesystem::path& dir);

struct PipelineOptions {
  std::filesystem::path runs_dir = "runs";
  int jobs = 1;
  /// Test hook: stop after this many stage completions, as if killed.
  std::optional<std::size_t> stop_after_stages;
};

/// A new run over the inputs of `graphs_dir`, or the existing one with the same id.
/// The id defaults to a hash of the config snapshot and the input hashes.
RunStore init_run(const RunConfig& config, const std::filesystem::path& graphs_dir, const PipelineOptions& opts,
                  const std::optional<std::string>& run_id = std::nullopt);

/// Model clients built from a config: mocks, or HTTP clients behind a response cache.
class Backends {
 public:
  Backends(const RunConfig& config, RunStore& store);
  ~Backends();

  Judge& judge() { return *judge_; }
  Embedder& embedder() { return *embedder_; }
  UnifiedModel& umm() { return *umm_; }
  GraphExtractor& extractor() { return *extractor_; }
  ChatClient& chat() { return *chat_; }
  ImageStore& images() { return *images_; }
  IdentityExtractor* identity() { return identity_; }
  MockUnifiedModel* mock_umm() { return mock_umm_; }

 private:
  std::unique_ptr<ImageStore> images_;
  std::unique_ptr<ContentCache> cache_;
  std::vector<std::unique_ptr<ChatClient>> chat_chain_;
  std::vector<std::unique_ptr<Embedder>> embed_chain_;
  std::vector<std::unique_ptr<UnifiedModel>> umm_chain_;
  std::unique_ptr<GraphExtractor> extractor_;
  std::unique_ptr<Judge> judge_;
  ChatClient* chat_ = nullptr;
  Embedder* embedder_ = nullptr;
  UnifiedModel* umm_ = nullptr;
  IdentityExtractor* identity_ = nullptr;
  MockUnifiedModel* mock_umm_ = nullptr;
};

struct RunSummary {
  std::string run_id;
  std::size_t images = 0;
  std::size_t stages_completed = 0;
  std::size_t quarantined_items = 0;
  std::size_t quarantined_facts = 0;
  bool stopped = false;

  /// 0 success, 2 partial (quarantined items or facts).
  int exit_code() const { return quarantined_items + quarantined_facts > 0 ? 2 : 0; }
};

/// Runs the given stages for every input (worker pool over images, each chain
/// sequential). Completed stages are skipped; a failing stage quarantines the item.
RunSummary run_stages(RunStore& store, std::span<const Stage> stages, const PipelineOptions& opts);

/// Metrics recomputed from the persisted fact ledgers and match results of every
/// item that is not quarantined.
MetricsReport compute_report(const RunStore& store);

/// compute_report plus the bundle in report/: report.json, the table CSVs,
/// tornado.csv and the concatenated fact ledger.
MetricsReport write_report(RunStore& store);

/// Family table (JSON and CSV) over several runs' reports.
void write_family_tables(std::span<const MetricsReport> reports, const std::filesystem::path& out_dir);

/// Stage sets behind the subcommands.
const std::vector<Stage>& refine_stages();
const std::vector<Stage>& qagen_stages();
const std::vector<Stage>& match_stages();
const std::vector<Stage>& score_stages();

}  // namespace xtc

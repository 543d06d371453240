#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

namespace xtc {

enum class Stage {
  graph,
  prompt,
  qa,
  generate,
  extract,
  match,
  judge_generation,
  understand,
  judge_understanding,
  facts,
};

std::string_view to_string(Stage s) noexcept;
Stage stage_from_string(std::string_view s);
const std::vector<Stage>& all_stages();

struct InputEntry {
  std::string image_id;
  std::string file;    // original path as given
  std::string sha256;  // of the file bytes
  bool raw = false;    // needs relation refinement

  bool operator==(const InputEntry&) const = default;
};

struct QuarantineEntry {
  std::string image_id;
  std::string stage;
  std::string fact_id;  // empty for whole-item failures
  std::string error;

  auto operator<=>(const QuarantineEntry&) const = default;
};

nlohmann::ordered_json to_json(const QuarantineEntry& q);

struct RunManifest {
  std::string run_id;
  std::string tool_version;
  nlohmann::json config;  // snapshot
  std::vector<InputEntry> inputs;
  std::map<std::string, std::set<Stage>> completed;
  std::set<QuarantineEntry> quarantine;
};

nlohmann::ordered_json to_json(const RunManifest& m);
RunManifest run_manifest_from_json(const nlohmann::json& j);

std::string tool_version();

/// runs/<id>/{manifest.json, graphs/, prompts/, qa/, images/, matches/, scores/, report/}
/// plus cache/ for model responses. Manifest updates are serialized and atomic.
class RunStore {
 public:
  /// Creates the directory tree and writes the manifest. An existing run with the
  /// same id is reopened when its config snapshot and inputs agree; otherwise InputError.
  static RunStore create(const std::filesystem::path& runs_dir, RunManifest manifest);
  /// Throws InputError naming manifest.json when the run does not exist.
  static RunStore open(const std::filesystem::path& runs_dir, const std::string& run_id);

  RunStore(RunStore&& other) noexcept;

  const std::filesystem::path& root() const noexcept { return root_; }
  RunManifest manifest() const;

  bool done(const std::string& image_id, Stage stage) const;
  void mark_done(const std::string& image_id, Stage stage);
  void add_quarantine(QuarantineEntry q);
  /// Drops whole-item entries of `image_id` (before a retry).
  void clear_item_quarantine(const std::string& image_id);
  bool item_quarantined(const std::string& image_id) const;

  std::filesystem::path dir(std::string_view sub) const { return root_ / sub; }
  std::filesystem::path input_graph(const std::string& id) const { return root_ / "graphs" / (id + ".input.json"); }
  std::filesystem::path ref_graph(const std::string& id) const { return root_ / "graphs" / (id + ".json"); }
  std::filesystem::path pred_graph(const std::string& id) const { return root_ / "graphs" / (id + ".pred.json"); }
  std::filesystem::path prompt(const std::string& id) const { return root_ / "prompts" / (id + ".json"); }
  std::filesystem::path qa(const std::string& id) const { return root_ / "qa" / (id + ".jsonl"); }
  std::filesystem::path generation(const std::string& id) const { return root_ / "images" / (id + ".json"); }
  std::filesystem::path match(const std::string& id) const { return root_ / "matches" / (id + ".json"); }
  std::filesystem::path generation_scores(const std::string& id) const {
    return root_ / "scores" / (id + ".generation.jsonl");
  }
  std::filesystem::path answers(const std::string& id) const { return root_ / "scores" / (id + ".answers.jsonl"); }
  std::filesystem::path understanding_scores(const std::string& id) const {
    return root_ / "scores" / (id + ".understanding.jsonl");
  }
  std::filesystem::path facts(const std::string& id) const { return root_ / "scores" / (id + ".facts.jsonl"); }
  std::filesystem::path report_dir() const { return root_ / "report"; }
  std::filesystem::path images_dir() const { return root_ / "images"; }
  std::filesystem::path cache_dir() const { return root_ / "cache"; }

  /// Reads an upstream artifact; the error names the missing file.
  std::string read_artifact(const std::filesystem::path& p) const;

 private:
  RunStore(std::filesystem::path root, RunManifest manifest);
  void persist_locked() const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
  RunManifest manifest_;
};

}  // namespace xtc

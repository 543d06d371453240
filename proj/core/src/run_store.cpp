#include "xtc/run_store.hpp"

#include <array>

#include "xtc/content_cache.hpp"
#include "xtc/error.hpp"

namespace fs = std::filesystem;

namespace xtc {

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 10> kStageNames{{
    {Stage::graph, "graph"},
    {Stage::prompt, "prompt"},
    {Stage::qa, "qa"},
    {Stage::generate, "generate"},
    {Stage::extract, "extract"},
    {Stage::match, "match"},
    {Stage::judge_generation, "judge_generation"},
    {Stage::understand, "understand"},
    {Stage::judge_understanding, "judge_understanding"},
    {Stage::facts, "facts"},
}};

constexpr std::string_view kManifestSchema = "xtc-run/1";
constexpr std::array<std::string_view, 8> kSubdirs{"graphs", "prompts", "qa", "images", "matches", "scores", "report", "cache"};

}  // namespace

std::string_view to_string(Stage s) noexcept {
  for (const auto& [st, name] : kStageNames) {
    if (st == s) return name;
  }
  return "?";
}

Stage stage_from_string(std::string_view s) {
  for (const auto& [st, name] : kStageNames) {
    if (name == s) return st;
  }
  throw SchemaError("unknown stage '" + std::string(s) + "'");
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> v = [] {
    std::vector<Stage> out;
    for (const auto& [st, _] : kStageNames) out.push_back(st);
    return out;
  }();
  return v;
}

std::string tool_version() {
#ifdef XTC_VERSION
  return XTC_VERSION;
#else
  return "0.0.0";
#endif
}

nlohmann::ordered_json to_json(const QuarantineEntry& q) {
  nlohmann::ordered_json j;
  j["image_id"] = q.image_id;
  j["stage"] = q.stage;
  if (!q.fact_id.empty()) j["fact_id"] = q.fact_id;
  j["error"] = q.error;
  return j;
}

nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["schema"] = kManifestSchema;
  j["run_id"] = m.run_id;
  j["tool_version"] = m.tool_version;
  j["config"] = m.config;
  auto& inputs = j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& in : m.inputs) {
    inputs.push_back({{"image_id", in.image_id}, {"file", in.file}, {"sha256", in.sha256}, {"raw", in.raw}});
  }
  auto& stages = j["stages"] = nlohmann::ordered_json::object();
  for (const auto& [image, done] : m.completed) {
    auto& arr = stages[image] = nlohmann::ordered_json::array();
    for (Stage s : done) arr.push_back(std::string(to_string(s)));
  }
  auto& q = j["quarantine"] = nlohmann::ordered_json::array();
  for (const auto& e : m.quarantine) q.push_back(to_json(e));
  return j;
}

RunManifest run_manifest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema") != kManifestSchema) throw SchemaError("manifest: unsupported schema");
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config = j.at("config");
    for (const auto& in : j.at("inputs")) {
      m.inputs.push_back({in.at("image_id").get<std::string>(), in.at("file").get<std::string>(),
                          in.at("sha256").get<std::string>(), in.at("raw").get<bool>()});
    }
    for (const auto& [image, arr] : j.at("stages").items()) {
      auto& set = m.completed[image];
      for (const auto& s : arr) set.insert(stage_from_string(s.get<std::string>()));
    }
    for (const auto& q : j.at("quarantine")) {
      m.quarantine.insert({q.at("image_id").get<std::string>(), q.at("stage").get<std::string>(),
                           q.value("fact_id", ""), q.at("error").get<std::string>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
}

RunStore::RunStore(fs::path root, RunManifest manifest) : root_(std::move(root)), manifest_(std::move(manifest)) {}

RunStore::RunStore(RunStore&& other) noexcept
    : root_(std::move(other.root_)), manifest_(std::move(other.manifest_)) {}

RunStore RunStore::create(const fs::path& runs_dir, RunManifest manifest) {
  const fs::path root = runs_dir / manifest.run_id;
  if (fs::exists(root / "manifest.json")) {
    RunStore existing = open(runs_dir, manifest.run_id);
    const auto m = existing.manifest();
    if (m.config != manifest.config) {
      throw InputError("run '" + manifest.run_id + "' exists with a different config snapshot");
    }
    if (m.inputs != manifest.inputs) throw InputError("run '" + manifest.run_id + "' exists with different inputs");
    return existing;
  }
  for (auto sub : kSubdirs) fs::create_directories(root / sub);
  RunStore store(root, std::move(manifest));
  std::lock_guard lock(store.mu_);
  store.persist_locked();
  return store;
}

RunStore RunStore::open(const fs::path& runs_dir, const std::string& run_id) {
  const fs::path root = runs_dir / run_id;
  const fs::path mpath = root / "manifest.json";
  if (!fs::exists(mpath)) throw InputError("run '" + run_id + "': missing " + mpath.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(mpath));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(mpath.string() + ": " + e.what());
  }
  for (auto sub : kSubdirs) fs::create_directories(root / sub);
  return RunStore(root, run_manifest_from_json(j));
}

RunManifest RunStore::manifest() const {
  std::lock_guard lock(mu_);
  return manifest_;
}

bool RunStore::done(const std::string& image_id, Stage stage) const {
  std::lock_guard lock(mu_);
  auto it = manifest_.completed.find(image_id);
  return it != manifest_.completed.end() && it->second.contains(stage);
}

void RunStore::mark_done(const std::string& image_id, Stage stage) {
  std::lock_guard lock(mu_);
  manifest_.completed[image_id].insert(stage);
  persist_locked();
}

void RunStore::add_quarantine(QuarantineEntry q) {
  std::lock_guard lock(mu_);
  manifest_.quarantine.insert(std::move(q));
  persist_locked();
}

void RunStore::clear_item_quarantine(const std::string& image_id) {
  std::lock_guard lock(mu_);
  std::erase_if(manifest_.quarantine,
                [&](const QuarantineEntry& q) { return q.image_id == image_id && q.fact_id.empty(); });
  persist_locked();
}

bool RunStore::item_quarantined(const std::string& image_id) const {
  std::lock_guard lock(mu_);
  for (const auto& q : manifest_.quarantine) {
    if (q.image_id == image_id && q.fact_id.empty()) return true;
  }
  return false;
}

std::string RunStore::read_artifact(const fs::path& p) const {
  if (!fs::exists(p)) throw InputError("missing upstream artifact " + p.string());
  return read_file(p);
}

void RunStore::persist_locked() const { write_file_atomic(root_ / "manifest.json", to_json(manifest_).dump(2) + "\n"); }

}  // namespace xtc

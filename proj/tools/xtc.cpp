// xtc: cross-task consistency evaluation of unified multimodal models.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "xtc/attr_schema.hpp"
#include "xtc/content_cache.hpp"
#include "xtc/dataset_stats.hpp"
#include "xtc/error.hpp"
#include "xtc/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFatal = 1;
constexpr int kExitStopped = 3;

struct RunFlags {
  std::string config_path;
  std::string graphs_dir;
  std::string model;
  std::string family;
  bool mock = false;
  std::string resume;
  std::string run_id;
  std::optional<double> alpha, beta, nr_threshold, pred_threshold;
  std::string runs_dir = "runs";
  int jobs = 1;
  std::optional<std::size_t> stop_after;
};

void add_run_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--config", f.config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  cmd.add_option("--graphs", f.graphs_dir, "Directory of reference scene graphs")->check(CLI::ExistingDirectory);
  cmd.add_option("--model", f.model, "Model id of the model under test");
  cmd.add_option("--family", f.family, "Model family label for aggregate tables");
  cmd.add_flag("--mock", f.mock, "Use deterministic mock backends");
  cmd.add_option("--resume", f.resume, "Continue an existing run");
  cmd.add_option("--run-id", f.run_id, "Explicit id for a new run");
  cmd.add_option("--alpha", f.alpha, "Node-cost attribute weight");
  cmd.add_option("--beta", f.beta, "Node-cost edge weight");
  cmd.add_option("--nr-threshold", f.nr_threshold, "No-relation filter threshold");
  cmd.add_option("--pred-threshold", f.pred_threshold, "Predicate score threshold");
  cmd.add_option("--runs-dir", f.runs_dir, "Root of run directories");
  cmd.add_option("--jobs", f.jobs, "Parallel images")->check(CLI::PositiveNumber);
  cmd.add_option("--stop-after-stages", f.stop_after)->group("");
}

xtc::RunConfig build_config(const RunFlags& f) {
  xtc::RunConfig cfg;
  if (!f.config_path.empty()) {
    json j;
    try {
      j = json::parse(xtc::read_file(f.config_path));
    } catch (const json::parse_error& e) {
      throw xtc::ParseError(f.config_path + ": " + e.what());
    }
    // flags may complete a config that is not valid on its own (e.g. missing endpoints with --mock)
    if (f.mock) j["mock"] = true;
    cfg = xtc::run_config_from_json(j);
  }
  if (f.mock) cfg.mock = true;
  if (!f.model.empty()) cfg.model_id = f.model;
  if (!f.family.empty()) cfg.family = f.family;
  if (f.alpha) cfg.cost.alpha = *f.alpha;
  if (f.beta) cfg.cost.beta = *f.beta;
  if (f.alpha && !f.beta) cfg.cost.beta = 1.0 - *f.alpha;
  if (f.beta && !f.alpha) cfg.cost.alpha = 1.0 - *f.beta;
  if (f.nr_threshold) cfg.refine.nr_threshold = *f.nr_threshold;
  if (f.pred_threshold) cfg.refine.predicate_threshold = *f.pred_threshold;
  cfg.validate();
  return cfg;
}

xtc::PipelineOptions options_of(const RunFlags& f) {
  xtc::PipelineOptions o;
  o.runs_dir = f.runs_dir;
  o.jobs = f.jobs;
  o.stop_after_stages = f.stop_after;
  return o;
}

xtc::RunStore open_or_create(const RunFlags& f) {
  if (!f.resume.empty()) return xtc::RunStore::open(f.runs_dir, f.resume);
  if (f.graphs_dir.empty()) throw xtc::InputError("either --resume <run-id> or --graphs <dir> is required");
  const std::optional<std::string> id = f.run_id.empty() ? std::nullopt : std::optional(f.run_id);
  return xtc::init_run(build_config(f), f.graphs_dir, options_of(f), id);
}

int run_mode(const RunFlags& f, const std::vector<xtc::Stage>& stages, bool report) {
  xtc::RunStore store = open_or_create(f);
  const xtc::RunSummary s = xtc::run_stages(store, stages, options_of(f));
  spdlog::info("run {}: {} images, {} stages completed, {} items and {} facts quarantined", s.run_id, s.images,
               s.stages_completed, s.quarantined_items, s.quarantined_facts);
  std::cout << s.run_id << "\n";
  if (s.stopped) return kExitStopped;
  if (report) xtc::write_report(store);
  return s.exit_code();
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(xtc::read_file(path));
  } catch (const json::parse_error& e) {
    throw xtc::ParseError(path + ": " + e.what());
  }
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    xtc::write_file_atomic(out, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("xtc");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$ %v");

  CLI::App app{"Cross-task consistency evaluation for unified multimodal models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", xtc::tool_version());
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  // refine
  RunFlags refine_f;
  std::string refine_input, refine_output, schema_path, attribute_image;
  auto* refine = app.add_subcommand("refine", "Refine raw scenes into reference scene graphs");
  add_run_flags(*refine, refine_f);
  refine->add_option("--input", refine_input, "Single graph or raw scene; prints the refined graph")
      ->check(CLI::ExistingFile);
  refine->add_option("--output", refine_output, "Output file for --input (default stdout)");
  refine->add_option("--schema", schema_path, "Metaclass attribute schema JSON")->check(CLI::ExistingFile);
  refine->add_option("--attribute-requests", attribute_image,
                     "With --input: print attribute-prediction requests for this image ref instead");

  // qagen
  RunFlags qagen_f;
  std::string qagen_graph, qagen_output;
  bool qagen_prompt = false;
  auto* qagen = app.add_subcommand("qagen", "Build generation prompts and understanding questions");
  add_run_flags(*qagen, qagen_f);
  qagen->add_option("--graph", qagen_graph, "Single scene graph; prints its questions as JSON lines")
      ->check(CLI::ExistingFile);
  qagen->add_flag("--prompt", qagen_prompt, "With --graph: print the linearized prompt instead");
  qagen->add_option("--output", qagen_output, "Output file for --graph (default stdout)");

  // match
  RunFlags match_f;
  std::string gt_path, pred_path;
  auto* match = app.add_subcommand("match", "Generate, extract and match predicted scene graphs");
  add_run_flags(*match, match_f);
  match->add_option("--gt", gt_path, "Reference scene graph")->check(CLI::ExistingFile);
  match->add_option("--pred", pred_path, "Predicted scene graph")->check(CLI::ExistingFile);

  // score
  RunFlags score_f;
  auto* score = app.add_subcommand("score", "Judge generation and understanding per fact");
  add_run_flags(*score, score_f);

  // report
  RunFlags report_f;
  std::vector<std::string> aggregate_runs;
  std::string aggregate_out;
  auto* report = app.add_subcommand("report", "Write the report bundle of a run, or aggregate runs");
  add_run_flags(*report, report_f);
  report->add_option("--aggregate", aggregate_runs, "Run ids to aggregate into family tables");
  report->add_option("--out", aggregate_out, "Output directory for --aggregate");

  // pipeline
  RunFlags pipe_f;
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write the report bundle");
  add_run_flags(*pipeline, pipe_f);

  // stats
  std::string stats_graphs, stats_name = "dataset", stats_format = "json";
  auto* stats = app.add_subcommand("stats", "Dataset statistics of a directory of scene graphs");
  stats->add_option("--graphs", stats_graphs, "Directory of scene graphs")->required()->check(CLI::ExistingDirectory);
  stats->add_option("--name", stats_name, "Dataset name column");
  stats->add_option("--format", stats_format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (refine->parsed()) {
      if (refine_input.empty()) return run_mode(refine_f, xtc::refine_stages(), false);
      const json doc = read_json_file(refine_input);
      RunFlags local = refine_f;
      local.mock = true;  // thresholds only; no backends are used here
      xtc::SceneGraph g = doc.value("schema", "") == "xtc-raw/1"
                              ? xtc::refine_scene(xtc::raw_scene_from_json(doc), build_config(local).refine)
                              : xtc::scene_graph_from_json(doc);
      if (attribute_image.empty()) {
        emit(xtc::serialize_scene_graph(g), refine_output);
        return 0;
      }
      const xtc::MetaClassSchema schema =
          schema_path.empty() ? xtc::default_metaclass_schema() : xtc::load_metaclass_schema(schema_path);
      std::string lines;
      for (const auto& n : g.nodes()) {
        if (!n.bbox || xtc::keys_for(n.label, schema).empty()) continue;
        lines += xtc::build_attribute_request(n, attribute_image, g.width(), g.height(), schema).to_json().dump() + "\n";
      }
      emit(lines, refine_output);
      return 0;
    }
    if (qagen->parsed()) {
      if (qagen_graph.empty()) return run_mode(qagen_f, xtc::qagen_stages(), false);
      const xtc::SceneGraph g = xtc::parse_scene_graph(xtc::read_file(qagen_graph));
      emit(qagen_prompt ? xtc::to_json(xtc::linearize(g)).dump(2) + "\n"
                        : xtc::qa_to_jsonl(xtc::generate_questions(g)),
           qagen_output);
      return 0;
    }
    if (match->parsed()) {
      if (gt_path.empty() != pred_path.empty()) throw xtc::InputError("--gt and --pred go together");
      if (gt_path.empty()) return run_mode(match_f, xtc::match_stages(), false);
      const xtc::SceneGraph gt = xtc::parse_scene_graph(xtc::read_file(gt_path));
      const xtc::SceneGraph pred = xtc::parse_scene_graph(xtc::read_file(pred_path));
      xtc::CostParams cost;
      if (match_f.alpha) cost.alpha = *match_f.alpha, cost.beta = 1.0 - *match_f.alpha;
      if (match_f.beta) cost.beta = *match_f.beta, cost.alpha = match_f.alpha ? *match_f.alpha : 1.0 - *match_f.beta;
      cost.validate();
      xtc::HashingEmbedder embedder;
      std::cout << xtc::to_json(xtc::match_graphs(gt, pred, cost, embedder)).dump(2) << "\n";
      return 0;
    }
    if (score->parsed()) return run_mode(score_f, xtc::score_stages(), false);
    if (pipeline->parsed()) {
      std::vector<xtc::Stage> all(xtc::all_stages().begin(), xtc::all_stages().end());
      return run_mode(pipe_f, all, true);
    }
    if (report->parsed()) {
      if (!aggregate_runs.empty()) {
        if (aggregate_out.empty()) throw xtc::InputError("--aggregate needs --out <dir>");
        std::vector<xtc::MetricsReport> reps;
        for (const auto& id : aggregate_runs) reps.push_back(xtc::compute_report(xtc::RunStore::open(report_f.runs_dir, id)));
        fs::create_directories(aggregate_out);
        xtc::write_family_tables(reps, aggregate_out);
        return 0;
      }
      xtc::RunStore store = open_or_create(report_f);
      xtc::write_report(store);
      std::cout << (store.report_dir() / "report.json").string() << "\n";
      return store.manifest().quarantine.empty() ? 0 : 2;
    }
    if (stats->parsed()) {
      std::vector<xtc::SceneGraph> graphs;
      for (const auto& p : xtc::list_graph_inputs(stats_graphs)) graphs.push_back(xtc::parse_scene_graph(xtc::read_file(p)));
      const xtc::StatsRow row = xtc::dataset_stats(graphs, stats_name);
      std::cout << (stats_format == "csv" ? xtc::stats_csv(row) : xtc::to_json(row).dump(2) + "\n");
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFatal;
  }
  return kExitFatal;
}

#include "xtc/pipeline.hpp"

#include <algorithm>
#include <spdlog/spdlog.h>
#include <thread>

#include "xtc/attr_schema.hpp"
#include "xtc/error.hpp"
#include "xtc/facts.hpp"
#include "xtc/hash.hpp"
#include "xtc/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace xtc {

// ---- config --------------------------------------------------------------------

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw SchemaError(where + ": unknown key '" + k + "'");
    }
  }
}

json template_versions() {
  auto h = [](std::string_view t) { return sha256_hex(t).substr(0, 12); };
  return {{"generation_check", kGenerationCheckVersion},
          {"vqa_judge", h(kVqaJudgeTemplate)},
          {"relation_verification", h(kRelationVerificationPrompt)},
          {"attribute_prompt", h(kAttributePromptTemplate)},
          {"object_refine", h(kObjectRefineTemplate)},
          {"sentence_refine", h(kSentenceRefineTemplate)},
          {"graph_extraction", h(kGraphExtractionPrompt)}};
}

json client_json(const std::optional<ClientConfig>& c) {
  if (!c) return nullptr;
  return json::parse(to_json(*c).dump());
}

}  // namespace

void RunConfig::validate() const {
  refine.validate();
  cost.validate();
  if (model_id.empty()) throw InputError("config: model_id is empty");
  if (extractor != "identity" && extractor != "fixture" && extractor != "vlm" && extractor != "service") {
    throw InputError("config: unknown extractor '" + extractor + "'");
  }
  if (extractor == "fixture" && extractor_dir.empty()) throw InputError("config: fixture extractor needs extractor_dir");
  if (mock) return;
  if (!umm) throw InputError("config: 'umm' client required unless running with mocks");
  if (!judge) throw InputError("config: 'judge' client required unless running with mocks");
  if (!embedder) throw InputError("config: 'embedder' client required unless running with mocks");
  const bool needs_chat =
      verify_relations || prompt_stage != PromptStage::linearized || extractor == "vlm";
  if (needs_chat && !chat) throw InputError("config: 'chat' client required for refinement, verification or vlm extraction");
  if (extractor == "service" && !extractor_service) throw InputError("config: service extractor needs 'extractor_service'");
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j, {"model_id", "family", "mock", "capabilities", "refine", "verify_relations", "cost",
                     "prompt_stage", "include_ambiguous", "extractor", "extractor_dir", "mock_answers",
                     "reference_images", "umm", "judge", "embedder", "chat", "extractor_service", "templates"},
                 "config");
  RunConfig c;
  try {
    c.model_id = j.value("model_id", c.model_id);
    c.family = j.value("family", c.family);
    c.mock = j.value("mock", c.mock);
    if (j.contains("capabilities")) {
      const auto& cap = j.at("capabilities");
      reject_unknown(cap, {"generation", "understanding"}, "config.capabilities");
      c.capabilities.generation = cap.value("generation", true);
      c.capabilities.understanding = cap.value("understanding", true);
    }
    if (j.contains("refine")) {
      const auto& r = j.at("refine");
      reject_unknown(r, {"nr_threshold", "predicate_threshold", "exclusive_predicates", "merge_min_group",
                         "bbox_pad_fraction"},
                     "config.refine");
      c.refine.nr_threshold = r.value("nr_threshold", c.refine.nr_threshold);
      c.refine.predicate_threshold = r.value("predicate_threshold", c.refine.predicate_threshold);
      if (r.contains("exclusive_predicates")) {
        c.refine.exclusive_predicates = r.at("exclusive_predicates").get<std::set<std::string>>();
      }
      c.refine.merge_min_group = r.value("merge_min_group", c.refine.merge_min_group);
      c.refine.bbox_pad_fraction = r.value("bbox_pad_fraction", c.refine.bbox_pad_fraction);
    }
    c.verify_relations = j.value("verify_relations", c.verify_relations);
    if (j.contains("cost")) {
      const auto& k = j.at("cost");
      reject_unknown(k, {"alpha", "beta", "rel_text_weight", "neighbor_attr_weight"}, "config.cost");
      c.cost.alpha = k.value("alpha", c.cost.alpha);
      c.cost.beta = k.value("beta", c.cost.beta);
      c.cost.rel_text_weight = k.value("rel_text_weight", c.cost.rel_text_weight);
      c.cost.neighbor_attr_weight = k.value("neighbor_attr_weight", c.cost.neighbor_attr_weight);
    }
    if (j.contains("prompt_stage")) c.prompt_stage = prompt_stage_from_string(j.at("prompt_stage").get<std::string>());
    c.include_ambiguous = j.value("include_ambiguous", c.include_ambiguous);
    c.extractor = j.value("extractor", c.extractor);
    c.extractor_dir = j.value("extractor_dir", c.extractor_dir);
    c.mock_answers = j.value("mock_answers", c.mock_answers);
    c.reference_images = j.value("reference_images", c.reference_images);
    auto client = [&](const char* key, std::string_view env) -> std::optional<ClientConfig> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      return client_config_from_json(j.at(key), std::string(env));
    };
    c.umm = client("umm", kUmmTokenEnv);
    c.judge = client("judge", kJudgeTokenEnv);
    c.embedder = client("embedder", kEmbedTokenEnv);
    c.chat = client("chat", kJudgeTokenEnv);
    c.extractor_service = client("extractor_service", kUmmTokenEnv);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  if (j.contains("templates") && j.at("templates") != template_versions()) {
    throw InputError("config: prompt templates differ from this build (snapshot " + j.at("templates").dump() + ")");
  }
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["model_id"] = c.model_id;
  j["family"] = c.family;
  j["mock"] = c.mock;
  j["capabilities"] = {{"generation", c.capabilities.generation}, {"understanding", c.capabilities.understanding}};
  j["refine"] = {{"nr_threshold", c.refine.nr_threshold},
                 {"predicate_threshold", c.refine.predicate_threshold},
                 {"exclusive_predicates", c.refine.exclusive_predicates},
                 {"merge_min_group", c.refine.merge_min_group},
                 {"bbox_pad_fraction", c.refine.bbox_pad_fraction}};
  j["verify_relations"] = c.verify_relations;
  j["cost"] = {{"alpha", c.cost.alpha},
               {"beta", c.cost.beta},
               {"rel_text_weight", c.cost.rel_text_weight},
               {"neighbor_attr_weight", c.cost.neighbor_attr_weight}};
  j["prompt_stage"] = std::string(to_string(c.prompt_stage));
  j["include_ambiguous"] = c.include_ambiguous;
  j["extractor"] = c.extractor;
  j["extractor_dir"] = c.extractor_dir;
  j["mock_answers"] = c.mock_answers;
  j["reference_images"] = c.reference_images;
  j["umm"] = client_json(c.umm);
  j["judge"] = client_json(c.judge);
  j["embedder"] = client_json(c.embedder);
  j["chat"] = client_json(c.chat);
  j["extractor_service"] = client_json(c.extractor_service);
  j["templates"] = template_versions();
  return j;
}

std::vector<fs::path> list_graph_inputs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("graphs directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no *.json graphs in '" + dir.string() + "'");
  return out;
}

// ---- run creation --------------------------------------------------------------

RunStore init_run(const RunConfig& config, const fs::path& graphs_dir, const PipelineOptions& opts,
                  const std::optional<std::string>& run_id) {
  config.validate();
  RunManifest m;
  m.tool_version = tool_version();
  m.config = to_json(config);
  std::map<std::string, std::string> bytes_by_id;
  for (const auto& p : list_graph_inputs(graphs_dir)) {
    const std::string bytes = read_file(p);
    const bool raw = p.filename().string().ends_with(".raw.json");
    json doc;
    try {
      doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
    const std::string id = raw ? raw_scene_from_json(doc).graph.image_id() : scene_graph_from_json(doc).image_id();
    if (bytes_by_id.contains(id)) throw InputError("image id '" + id + "' appears in two input files");
    bytes_by_id[id] = bytes;
    m.inputs.push_back({id, p.filename().string(), sha256_hex(bytes), raw});
  }
  std::sort(m.inputs.begin(), m.inputs.end(),
            [](const InputEntry& a, const InputEntry& b) { return a.image_id < b.image_id; });
  if (run_id) {
    m.run_id = *run_id;
  } else {
    std::string seed = m.config.dump();
    for (const auto& in : m.inputs) seed += "\n" + in.image_id + ":" + in.sha256;
    m.run_id = "run-" + sha256_hex(seed).substr(0, 12);
  }
  if (m.run_id.empty() || m.run_id.find('/') != std::string::npos) throw InputError("invalid run id '" + m.run_id + "'");
  RunStore store = RunStore::create(opts.runs_dir, std::move(m));
  for (const auto& [id, bytes] : bytes_by_id) {
    if (!fs::exists(store.input_graph(id))) write_file_atomic(store.input_graph(id), bytes);
  }
  return store;
}

// ---- backends ------------------------------------------------------------------

namespace {

class UnconfiguredChat : public ChatClient {
 public:
  std::string chat(const ChatRequest&) override { throw ClientError("no chat endpoint configured", false); }
};

std::string mock_chat_reply(const ChatRequest& r) {
  if (r.prompt.starts_with(kRelationVerificationPrompt)) return R"({"answer": "Yes"})";
  if (auto pos = r.prompt.rfind(kRefinePayloadMarker); pos != std::string::npos) {
    return r.prompt.substr(pos + kRefinePayloadMarker.size());
  }
  return {};
}

}  // namespace

Backends::Backends(const RunConfig& cfg, RunStore& store) {
  images_ = std::make_unique<ImageStore>(store.images_dir());
  cache_ = std::make_unique<ContentCache>(store.cache_dir());
  if (cfg.mock) {
    auto chat = std::make_unique<MockChatClient>(std::map<std::string, std::string>{}, false);
    chat->set_fallback(mock_chat_reply);
    chat_ = chat.get();
    chat_chain_.push_back(std::move(chat));
    embed_chain_.push_back(std::make_unique<HashingEmbedder>());
    embed_chain_.push_back(std::make_unique<CachingEmbedder>(*embed_chain_.back(), "hashing-384"));
    embedder_ = embed_chain_.back().get();
    auto umm = std::make_unique<MockUnifiedModel>(*images_, cfg.capabilities);
    mock_umm_ = umm.get();
    umm_ = umm.get();
    umm_chain_.push_back(std::move(umm));
    judge_ = std::make_unique<MockJudge>();
  } else {
    const auto resolver = store_resolver(*images_);
    if (cfg.chat) {
      chat_chain_.push_back(std::make_unique<HttpChatClient>(*cfg.chat, resolver));
      chat_chain_.push_back(std::make_unique<CachingChatClient>(*chat_chain_.back(), *cache_, cfg.chat->model));
    } else {
      chat_chain_.push_back(std::make_unique<UnconfiguredChat>());
    }
    chat_ = chat_chain_.back().get();
    chat_chain_.push_back(std::make_unique<HttpChatClient>(*cfg.judge, resolver));
    chat_chain_.push_back(std::make_unique<CachingChatClient>(*chat_chain_.back(), *cache_, cfg.judge->model));
    judge_ = std::make_unique<LlmJudge>(*chat_chain_.back());
    embed_chain_.push_back(std::make_unique<HttpEmbedder>(*cfg.embedder));
    embed_chain_.push_back(std::make_unique<CachingEmbedder>(*embed_chain_.back(), cfg.embedder->model, cache_.get()));
    embedder_ = embed_chain_.back().get();
    umm_chain_.push_back(std::make_unique<HttpUnifiedModel>(*cfg.umm, *images_, cfg.capabilities));
    umm_chain_.push_back(std::make_unique<CachingUnifiedModel>(*umm_chain_.back(), *cache_, cfg.model_id));
    umm_ = umm_chain_.back().get();
  }
  if (cfg.extractor == "identity") {
    auto id = std::make_unique<IdentityExtractor>();
    identity_ = id.get();
    extractor_ = std::move(id);
  } else if (cfg.extractor == "fixture") {
    extractor_ = std::make_unique<FixtureExtractor>(cfg.extractor_dir);
  } else if (cfg.extractor == "vlm") {
    extractor_ = std::make_unique<VlmPromptExtractor>(*chat_);
  } else {
    extractor_ = std::make_unique<ServiceExtractor>(*cfg.extractor_service, store_resolver(*images_));
  }
}

Backends::~Backends() = default;

// ---- stages --------------------------------------------------------------------

const std::vector<Stage>& refine_stages() {
  static const std::vector<Stage> s{Stage::graph};
  return s;
}
const std::vector<Stage>& qagen_stages() {
  static const std::vector<Stage> s{Stage::prompt, Stage::qa};
  return s;
}
const std::vector<Stage>& match_stages() {
  static const std::vector<Stage> s{Stage::generate, Stage::extract, Stage::match};
  return s;
}
const std::vector<Stage>& score_stages() {
  static const std::vector<Stage> s{Stage::judge_generation, Stage::understand, Stage::judge_understanding,
                                    Stage::facts};
  return s;
}

namespace {

struct ImageJob {
  RunStore& store;
  const RunConfig& cfg;
  Backends& be;
  const InputEntry& input;
  std::size_t fact_failures = 0;

  const std::string& id() const { return input.image_id; }

  json read_json(const fs::path& p) const {
    try {
      return json::parse(store.read_artifact(p));
    } catch (const json::parse_error& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
  }

  SceneGraph ref_graph() const { return parse_scene_graph(store.read_artifact(store.ref_graph(id()))); }
  MatchResult match() const { return match_result_from_json(read_json(store.match(id()))); }
  std::vector<QAItem> questions() const { return qa_from_jsonl(store.read_artifact(store.qa(id()))); }

  void fact_failed(Stage stage, const std::string& fact_id, const std::exception& e) {
    ++fact_failures;
    store.add_quarantine({id(), std::string(to_string(stage)), fact_id, e.what()});
    spdlog::warn("{} {} fact {}: {}", id(), to_string(stage), fact_id, e.what());
  }

  std::string reference_ref() {
    if (cfg.reference_images.empty()) return "ref:" + id();
    for (const char* ext : {"png", "jpg", "jpeg", "ppm"}) {
      const fs::path p = fs::path(cfg.reference_images) / (id() + "." + ext);
      if (fs::exists(p)) return be.images().put(read_file(p), ext);
    }
    throw InputError("no reference image for '" + id() + "' in " + cfg.reference_images);
  }

  bool generated() const { return !read_json(store.generation(id())).value("skipped", false); }

  void run(Stage stage) {
    switch (stage) {
      case Stage::graph: return graph();
      case Stage::prompt: return prompt();
      case Stage::qa:
        write_file_atomic(store.qa(id()), qa_to_jsonl(generate_questions(ref_graph())));
        return;
      case Stage::generate: return generate();
      case Stage::extract: return extract();
      case Stage::match: return do_match();
      case Stage::judge_generation: return judge_generation();
      case Stage::understand: return understand();
      case Stage::judge_understanding: return judge_understanding();
      case Stage::facts: return facts();
    }
  }

  void graph() {
    const json doc = read_json(store.input_graph(id()));
    if (!input.raw) {
      write_file_atomic(store.ref_graph(id()), serialize_scene_graph(scene_graph_from_json(doc)));
      return;
    }
    const RawScene raw = raw_scene_from_json(doc);
    RelationVerifier verify;
    if (cfg.verify_relations) verify = chat_relation_verifier(be.chat(), reference_ref(), raw.graph);
    write_file_atomic(store.ref_graph(id()), serialize_scene_graph(refine_scene(raw, cfg.refine, verify)));
  }

  void prompt() {
    PromptDraft d = linearize(ref_graph());
    if (cfg.prompt_stage != PromptStage::linearized) d = refine_prompt(d, PromptStage::object_refined, be.chat());
    if (cfg.prompt_stage == PromptStage::sentence_refined) d = refine_prompt(d, PromptStage::sentence_refined, be.chat());
    write_file_atomic(store.prompt(id()), to_json(d).dump(2) + "\n");
  }

  void generate() {
    nlohmann::ordered_json out;
    if (!cfg.capabilities.generation) {
      out["skipped"] = true;
    } else {
      const PromptDraft d = prompt_draft_from_json(read_json(store.prompt(id())));
      out["prompt"] = d.text;
      out["image_ref"] = be.umm().generate_image(d.text);
    }
    write_file_atomic(store.generation(id()), out.dump(2) + "\n");
  }

  void extract() {
    if (!generated()) return;
    const SceneGraph g = ref_graph();
    if (be.identity()) be.identity()->add(g);
    const std::string ref = read_json(store.generation(id())).at("image_ref").get<std::string>();
    const SceneGraph pred = be.extractor().extract(ref, {id(), g.width(), g.height()});
    write_file_atomic(store.pred_graph(id()), serialize_scene_graph(pred));
  }

  void do_match() {
    const SceneGraph g = ref_graph();
    MatchResult m;
    if (generated()) {
      const SceneGraph pred = parse_scene_graph(store.read_artifact(store.pred_graph(id())));
      m = match_graphs(g, pred, cfg.cost, be.embedder());
    } else {
      m.gt_image_id = g.image_id();
      m.gt_node_count = g.nodes().size();
      for (const auto& n : g.nodes()) m.unmatched_gt.push_back(n.id);
    }
    write_file_atomic(store.match(id()), to_json(m).dump(2) + "\n");
  }

  void judge_generation() {
    ScoreLedger ledger;
    if (generated()) {
      const SceneGraph g = ref_graph();
      const SceneGraph pred = parse_scene_graph(store.read_artifact(store.pred_graph(id())));
      const MatchResult m = match();
      for (const auto& f : enumerate_facts(g)) {
        if (f.kind == FactKind::object) continue;
        const auto value = lookup_predicted_value(f, pred, m);
        const auto prompt = render_generation_check(f, g, value, m);
        if (!prompt) {
          ledger.add({f.fact_id, 0, std::string("unmatched")});
          continue;
        }
        try {
          ledger.add(judge_fact(be.judge(), {f.fact_id, *prompt, f.value, value.value_or("")}));
        } catch (const Error& e) {
          fact_failed(Stage::judge_generation, f.fact_id, e);
        }
      }
    }
    write_file_atomic(store.generation_scores(id()), ledger.to_jsonl());
  }

  void understand() {
    std::string out;
    if (cfg.capabilities.understanding) {
      const auto items = questions();
      const std::string ref = reference_ref();
      if (be.mock_umm()) load_mock_answers(items, ref);
      for (const auto& q : items) {
        if (q.ambiguous && !cfg.include_ambiguous) continue;
        try {
          const std::string answer = be.umm().answer_question(ref, q.question);
          nlohmann::ordered_json line;
          line["fact_id"] = q.fact_id;
          line["question"] = q.question;
          line["answer"] = answer;
          out += line.dump() + "\n";
        } catch (const Error& e) {
          fact_failed(Stage::understand, q.fact_id, e);
        }
      }
    }
    write_file_atomic(store.answers(id()), out);
  }

  void load_mock_answers(const std::vector<QAItem>& items, const std::string& ref) {
    if (cfg.mock_answers == "oracle") {
      for (const auto& q : items) be.mock_umm()->set_answer(ref, q.question, q.answer);
      return;
    }
    if (cfg.mock_answers == "none") return;
    const std::string text = read_file(cfg.mock_answers);
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const std::string line = trim(std::string_view(text).substr(start, end - start));
      start = end + 1;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (j.at("image_id") == id()) {
        be.mock_umm()->set_answer(ref, j.at("question").get<std::string>(), j.at("answer").get<std::string>());
      }
    }
  }

  void judge_understanding() {
    std::map<std::string, QAItem> by_id;
    for (auto& q : questions()) by_id.emplace(q.fact_id, std::move(q));
    ScoreLedger ledger;
    const std::string text = store.read_artifact(store.answers(id()));
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const std::string line(std::string_view(text).substr(start, end - start));
      start = end + 1;
      if (trim(line).empty()) continue;
      const json j = json::parse(line);
      const std::string fid = j.at("fact_id").get<std::string>();
      const std::string answer = j.at("answer").get<std::string>();
      auto it = by_id.find(fid);
      if (it == by_id.end()) throw InputError("answer for unknown question " + fid + " in " + store.answers(id()).string());
      try {
        ledger.add(judge_fact(be.judge(), {fid, render_vqa_judge(it->second.answer, answer), it->second.answer, answer}));
      } catch (const Error& e) {
        fact_failed(Stage::judge_understanding, fid, e);
      }
    }
    write_file_atomic(store.understanding_scores(id()), ledger.to_jsonl());
  }

  void facts() {
    const SceneGraph g = ref_graph();
    const MatchResult m = match();
    const auto gen = ScoreLedger::from_jsonl(store.read_artifact(store.generation_scores(id())));
    const auto und = ScoreLedger::from_jsonl(store.read_artifact(store.understanding_scores(id())));
    std::string out;
    for (const auto& f : enumerate_facts(g)) {
      FactRecord r;
      r.image_id = id();
      r.fact_id = f.fact_id;
      r.kind = f.kind;
      r.subject = f.subject;
      r.object = f.object;
      r.key = f.key;
      r.matched = m.pred_for(f.subject).has_value() && (f.kind != FactKind::relation || m.pred_for(f.object).has_value());
      if (const auto* s = gen.find(f.fact_id)) r.g_raw = s->raw;
      if (const auto* s = und.find(f.fact_id)) r.u_raw = s->raw;
      out += to_json(r).dump() + "\n";
    }
    write_file_atomic(store.facts(id()), out);
  }
};

fs::path artifact_of(const RunStore& store, Stage s, const std::string& id) {
  switch (s) {
    case Stage::graph: return store.ref_graph(id);
    case Stage::prompt: return store.prompt(id);
    case Stage::qa: return store.qa(id);
    case Stage::generate: return store.generation(id);
    case Stage::extract: return store.pred_graph(id);
    case Stage::match: return store.match(id);
    case Stage::judge_generation: return store.generation_scores(id);
    case Stage::understand: return store.answers(id);
    case Stage::judge_understanding: return store.understanding_scores(id);
    case Stage::facts: return store.facts(id);
  }
  return {};
}

}  // namespace

RunSummary run_stages(RunStore& store, std::span<const Stage> requested, const PipelineOptions& opts) {
  const RunManifest manifest = store.manifest();
  const RunConfig cfg = run_config_from_json(manifest.config);
  std::vector<Stage> stages(requested.begin(), requested.end());
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());

  auto quarantined_outside = [&](const std::string& id) {
    for (const auto& q : store.manifest().quarantine) {
      if (q.image_id == id && q.fact_id.empty() &&
          std::find(stages.begin(), stages.end(), stage_from_string(q.stage)) == stages.end()) {
        return true;
      }
    }
    return false;
  };

  // every stage before the first requested one must already be done
  if (!stages.empty()) {
    for (const auto& in : manifest.inputs) {
      if (quarantined_outside(in.image_id)) continue;
      for (Stage s : all_stages()) {
        if (s >= stages.front()) break;
        if (!store.done(in.image_id, s)) {
          throw InputError("image '" + in.image_id + "': missing upstream artifact " +
                           artifact_of(store, s, in.image_id).string() + " (stage " + std::string(to_string(s)) +
                           " not run)");
        }
      }
    }
  }

  Backends be(cfg, store);
  std::atomic<std::size_t> next{0}, completed{0}, fact_failures{0};
  std::atomic<bool> stop{false};

  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.inputs.size(); i = next++) {
      const InputEntry& input = manifest.inputs[i];
      if (quarantined_outside(input.image_id)) continue;
      if (store.item_quarantined(input.image_id)) store.clear_item_quarantine(input.image_id);
      ImageJob job{store, cfg, be, input};
      for (Stage s : stages) {
        if (stop) return;
        if (store.done(input.image_id, s)) continue;
        try {
          job.run(s);
        } catch (const std::exception& e) {
          spdlog::error("{}: stage {} failed: {}", input.image_id, to_string(s), e.what());
          store.add_quarantine({input.image_id, std::string(to_string(s)), "", e.what()});
          break;
        }
        store.mark_done(input.image_id, s);
        const std::size_t n = ++completed;
        if (opts.stop_after_stages && n >= *opts.stop_after_stages) stop = true;
      }
      fact_failures += job.fact_failures;
    }
  };

  const std::size_t threads =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(1, opts.jobs)), manifest.inputs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RunSummary sum;
  sum.run_id = manifest.run_id;
  sum.images = manifest.inputs.size();
  sum.stages_completed = completed;
  sum.stopped = stop;
  for (const auto& q : store.manifest().quarantine) {
    if (q.fact_id.empty()) ++sum.quarantined_items;
    else ++sum.quarantined_facts;
  }
  return sum;
}

// ---- report --------------------------------------------------------------------

namespace {

struct Ledgers {
  std::vector<FactRecord> records;
  std::vector<MatchResult> matches;
  std::vector<std::string> images;
  std::vector<std::string> excluded;
};

Ledgers load_ledgers(const RunStore& store) {
  const RunManifest m = store.manifest();
  Ledgers out;
  for (const auto& in : m.inputs) {
    if (store.item_quarantined(in.image_id) || !store.done(in.image_id, Stage::facts)) {
      out.excluded.push_back(in.image_id);
      continue;
    }
    out.images.push_back(in.image_id);
    out.matches.push_back(match_result_from_json(json::parse(store.read_artifact(store.match(in.image_id)))));
    const std::string text = store.read_artifact(store.facts(in.image_id));
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const auto line = text.substr(start, end - start);
      start = end + 1;
      if (!trim(line).empty()) out.records.push_back(fact_record_from_json(json::parse(line)));
    }
  }
  return out;
}

}  // namespace

MetricsReport compute_report(const RunStore& store) {
  const RunConfig cfg = run_config_from_json(store.manifest().config);
  const Ledgers l = load_ledgers(store);
  return build_report(l.records, l.matches, cfg.model_id, cfg.family);
}

MetricsReport write_report(RunStore& store) {
  const RunManifest m = store.manifest();
  const RunConfig cfg = run_config_from_json(m.config);
  const Ledgers l = load_ledgers(store);
  if (l.images.empty()) throw InputError("run '" + m.run_id + "': no item has completed the facts stage");
  const MetricsReport rep = build_report(l.records, l.matches, cfg.model_id, cfg.family);
  const std::vector<MetricsReport> reps{rep};
  const auto families = aggregate_families(reps);

  nlohmann::ordered_json j;
  j["schema"] = "xtc-report/1";
  j["run_id"] = m.run_id;
  j["tool_version"] = m.tool_version;
  j["images"] = l.images;
  j["excluded"] = l.excluded;
  auto& q = j["quarantine"] = nlohmann::ordered_json::array();
  for (const auto& e : m.quarantine) q.push_back(to_json(e));
  j["metrics"] = to_json(rep);
  auto& fam = j["families"] = nlohmann::ordered_json::array();
  for (const auto& f : families) fam.push_back(to_json(f));

  const fs::path dir = store.report_dir();
  write_file_atomic(dir / "report.json", j.dump(2) + "\n");
  write_file_atomic(dir / "generation.csv", generation_table_csv(reps));
  write_file_atomic(dir / "understanding.csv", understanding_table_csv(reps));
  write_file_atomic(dir / "ccta.csv", ccta_table_csv(reps));
  write_file_atomic(dir / "family.csv", family_table_csv(families));
  write_file_atomic(dir / "tornado.csv", tornado_csv(reps));
  std::string facts;
  for (const auto& r : l.records) facts += to_json(r).dump() + "\n";
  write_file_atomic(dir / "facts.jsonl", facts);
  return rep;
}

void write_family_tables(std::span<const MetricsReport> reports, const fs::path& out_dir) {
  const auto families = aggregate_families(reports);
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& f : families) j.push_back(to_json(f));
  write_file_atomic(out_dir / "family.json", j.dump(2) + "\n");
  write_file_atomic(out_dir / "family.csv", family_table_csv(families));
  write_file_atomic(out_dir / "generation.csv", generation_table_csv(reports));
  write_file_atomic(out_dir / "understanding.csv", understanding_table_csv(reports));
  write_file_atomic(out_dir / "ccta.csv", ccta_table_csv(reports));
  write_file_atomic(out_dir / "tornado.csv", tornado_csv(reports));
}

}  // namespace xtc

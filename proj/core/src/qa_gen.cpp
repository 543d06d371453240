#include "xtc/qa_gen.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <sstream>

#include "xtc/facts.hpp"
#include "xtc/taxonomy.hpp"
#include "xtc/text.hpp"

namespace xtc {

std::string_view to_string(PromptStage s) noexcept {
  switch (s) {
    case PromptStage::linearized: return "linearized";
    case PromptStage::object_refined: return "object_refined";
    case PromptStage::sentence_refined: return "sentence_refined";
  }
  return "linearized";
}

PromptStage prompt_stage_from_string(std::string_view s) {
  if (s == "linearized") return PromptStage::linearized;
  if (s == "object_refined") return PromptStage::object_refined;
  if (s == "sentence_refined") return PromptStage::sentence_refined;
  throw SchemaError("unknown prompt stage '" + std::string(s) + "'");
}

std::string_view to_string(QueryKind k) noexcept {
  switch (k) {
    case QueryKind::attribute_query: return "attribute_query";
    case QueryKind::object_retrieval: return "object_retrieval";
    case QueryKind::relation_query: return "relation_query";
  }
  return "attribute_query";
}

QueryKind query_kind_from_string(std::string_view s) {
  if (s == "attribute_query") return QueryKind::attribute_query;
  if (s == "object_retrieval") return QueryKind::object_retrieval;
  if (s == "relation_query") return QueryKind::relation_query;
  throw SchemaError("unknown query kind '" + std::string(s) + "'");
}

// ---- disambiguation ------------------------------------------------------------

bool attribute_values_distinct(std::string_view a, std::string_view b) {
  const std::string la = to_lower(trim(a));
  const std::string lb = to_lower(trim(b));
  if (la.find(lb) != std::string::npos || lb.find(la) != std::string::npos) return false;
  const auto ta = token_set(la);
  const auto tb = token_set(lb);
  return std::none_of(ta.begin(), ta.end(), [&](const std::string& t) { return tb.contains(t); });
}

bool keys_distinguish(const Node& target, const Node& competitor, std::span<const std::string> keys) {
  for (const auto& k : keys) {
    auto t = target.attributes.find(k);
    auto c = competitor.attributes.find(k);
    if (t == target.attributes.end() || c == competitor.attributes.end()) continue;
    if (attribute_values_distinct(t->second, c->second)) return true;
  }
  return false;
}

namespace {

// Visits k-subsets of [0, n) in lexicographic order until `visit` returns true.
template <typename F>
bool for_each_combination(std::size_t n, std::size_t k, F&& visit) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    if (visit(idx)) return true;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

Disambiguation minimal_disambiguating_attributes(const Node& target, std::span<const Node> competitors) {
  if (competitors.empty()) return {};
  if (target.attributes.empty()) {
    throw UndisambiguableError("node '" + target.id + "' has no attributes but " +
                               std::to_string(competitors.size()) + " same-label competitor(s)");
  }
  std::vector<std::string> keys;
  for (const auto& [k, _] : target.attributes) keys.push_back(k);  // map order = sorted

  Disambiguation found;
  std::vector<std::string> subset;
  for (std::size_t size = 1; size <= keys.size(); ++size) {
    const bool hit = for_each_combination(keys.size(), size, [&](const std::vector<std::size_t>& idx) {
      subset.clear();
      for (auto i : idx) subset.push_back(keys[i]);
      return std::all_of(competitors.begin(), competitors.end(),
                         [&](const Node& c) { return keys_distinguish(target, c, subset); });
    });
    if (hit) {
      found.keys = subset;
      return found;
    }
  }
  found.keys = keys;
  found.ambiguous = true;
  return found;
}

// ---- linearization -------------------------------------------------------------

namespace {

std::string values_phrase(const Node& n, const std::vector<std::string>& keys) {
  std::vector<std::string> vals;
  for (const auto& k : keys) {
    if (auto it = n.attributes.find(k); it != n.attributes.end()) vals.push_back(it->second);
  }
  return join(vals, " ");
}

std::vector<std::string> all_keys(const Node& n) {
  std::vector<std::string> keys;
  for (const auto& [k, _] : n.attributes) keys.push_back(k);
  return keys;
}

// "the [group of] [values] label"
std::string reference(const Node& n, const std::vector<std::string>& keys) {
  std::string out = "the ";
  if (n.merged_count > 1) out += "group of ";
  const std::string vals = values_phrase(n, keys);
  if (!vals.empty()) out += vals + " ";
  return out + n.label;
}

std::vector<Node> competitors_of(const SceneGraph& g, const Node& n) {
  std::vector<Node> out;
  for (const auto& other : g.nodes()) {
    if (other.id != n.id && other.label == n.label) out.push_back(other);
  }
  return out;
}

struct Reference {
  std::string phrase;
  std::vector<std::string> keys;
  bool ambiguous = false;
};

Reference disambiguated_reference(const SceneGraph& g, const Node& n) {
  Reference r;
  const auto comps = competitors_of(g, n);
  try {
    auto d = minimal_disambiguating_attributes(n, comps);
    r.keys = std::move(d.keys);
    r.ambiguous = d.ambiguous;
  } catch (const UndisambiguableError&) {
    r.ambiguous = true;
  }
  r.phrase = reference(n, r.keys);
  return r;
}

std::string compose_text(const std::vector<std::string>& object_clauses,
                         const std::vector<std::string>& relation_clauses) {
  std::vector<std::string> clauses = object_clauses;
  clauses.insert(clauses.end(), relation_clauses.begin(), relation_clauses.end());
  if (clauses.empty()) return "";
  return join(clauses, ". ") + ".";
}

std::string strip_sentence(std::string_view s) {
  std::string out = trim(s);
  while (!out.empty() && (out.back() == '.' || out.back() == ' ')) out.pop_back();
  return out;
}

bool covers(std::string_view text, const std::vector<std::string>& labels) {
  const std::string lower = to_lower(text);
  return std::all_of(labels.begin(), labels.end(),
                     [&](const std::string& l) { return lower.find(to_lower(l)) != std::string::npos; });
}

}  // namespace

PromptDraft linearize(const SceneGraph& g) {
  PromptDraft d;
  d.stage = PromptStage::linearized;
  for (const auto& f : enumerate_facts(g)) d.source_fact_ids.insert(f.fact_id);
  std::set<std::string> labels;
  for (const auto& n : g.nodes()) {
    std::string clause = "a ";
    if (n.merged_count > 1) clause += "group of " + std::to_string(n.merged_count) + " ";
    const std::string vals = values_phrase(n, all_keys(n));
    if (!vals.empty()) clause += vals + " ";
    clause += n.label;
    d.object_clauses.push_back(std::move(clause));
    labels.insert(n.label);
  }
  for (const auto& e : g.edges()) {
    const Node& s = *g.find_node(e.source);
    const Node& o = *g.find_node(e.target);
    d.relation_clauses.push_back(disambiguated_reference(g, s).phrase + " is " + relation_value(e) + " " +
                                 disambiguated_reference(g, o).phrase);
  }
  d.required_labels.assign(labels.begin(), labels.end());
  d.text = compose_text(d.object_clauses, d.relation_clauses);
  if (d.text.empty()) {
    d.warnings.push_back("graph '" + g.image_id() + "' has no nodes; prompt is empty");
    spdlog::warn("qa-gen: {}", d.warnings.back());
  }
  return d;
}

PromptDraft refine_prompt(const PromptDraft& draft, PromptStage stage, ChatClient& chat) {
  const bool valid = (draft.stage == PromptStage::linearized && stage == PromptStage::object_refined) ||
                     (draft.stage == PromptStage::object_refined && stage == PromptStage::sentence_refined);
  if (!valid) {
    throw InputError("refine_prompt: cannot go from " + std::string(to_string(draft.stage)) + " to " +
                     std::string(to_string(stage)));
  }
  PromptDraft out = draft;
  out.stage = stage;
  if (draft.text.empty()) return out;

  std::string text;
  std::vector<std::string> object_clauses;
  if (stage == PromptStage::object_refined) {
    for (const auto& clause : draft.object_clauses) {
      ChatRequest req{std::string(kObjectRefineTemplate) + std::string(kRefinePayloadMarker) + clause, {}, true};
      object_clauses.push_back(strip_sentence(chat.chat(req)));
    }
    text = compose_text(object_clauses, draft.relation_clauses);
  } else {
    ChatRequest req{std::string(kSentenceRefineTemplate) + std::string(kRefinePayloadMarker) + draft.text, {}, true};
    text = trim(chat.chat(req));
  }

  if (!covers(text, draft.required_labels)) {
    out.refinement_fallback = true;
    out.warnings.push_back(std::string(to_string(stage)) + " output dropped a node label; kept input text");
    spdlog::warn("qa-gen: {}", out.warnings.back());
    return out;
  }
  out.text = std::move(text);
  if (stage == PromptStage::object_refined) out.object_clauses = std::move(object_clauses);
  return out;
}

nlohmann::ordered_json to_json(const PromptDraft& d) {
  nlohmann::ordered_json j;
  j["stage"] = to_string(d.stage);
  j["text"] = d.text;
  j["source_fact_ids"] = d.source_fact_ids;
  j["object_clauses"] = d.object_clauses;
  j["relation_clauses"] = d.relation_clauses;
  j["required_labels"] = d.required_labels;
  j["refinement_fallback"] = d.refinement_fallback;
  j["warnings"] = d.warnings;
  return j;
}

PromptDraft prompt_draft_from_json(const nlohmann::json& j) {
  try {
    PromptDraft d;
    d.stage = prompt_stage_from_string(j.at("stage").get<std::string>());
    d.text = j.at("text").get<std::string>();
    d.source_fact_ids = j.at("source_fact_ids").get<std::set<std::string>>();
    d.object_clauses = j.at("object_clauses").get<std::vector<std::string>>();
    d.relation_clauses = j.at("relation_clauses").get<std::vector<std::string>>();
    d.required_labels = j.at("required_labels").get<std::vector<std::string>>();
    d.refinement_fallback = j.at("refinement_fallback").get<bool>();
    d.warnings = j.at("warnings").get<std::vector<std::string>>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("prompt draft: ") + e.what());
  }
}

// ---- questions -----------------------------------------------------------------

namespace {

std::string relation_question(RelationCategory cat, const std::string& s, const std::string& o) {
  switch (cat) {
    case RelationCategory::spatial: return "What is the spatial position of " + s + " relative to " + o + "?";
    case RelationCategory::posture: return "What is the posture of " + s + " relative to " + o + "?";
    case RelationCategory::locomotion: return "How is " + s + " moving relative to " + o + "?";
    case RelationCategory::social: return "How is " + s + " interacting with " + o + "?";
    case RelationCategory::other: break;
  }
  return "What is the relationship between " + s + " and " + o + "?";
}

// "a", "a and b", "a, b and c"
std::string enumerate_phrase(const std::vector<std::string>& parts) {
  if (parts.size() <= 1) return parts.empty() ? "" : parts.front();
  std::vector<std::string> head(parts.begin(), parts.end() - 1);
  return join(head, ", ") + " and " + parts.back();
}

}  // namespace

std::vector<QAItem> generate_questions(const SceneGraph& g) {
  std::vector<QAItem> items;
  const auto& img = g.image_id();
  for (const auto& n : g.nodes()) {
    const auto comps = competitors_of(g, n);
    for (const auto& [key, value] : n.attributes) {
      // the queried attribute never appears in its own subject reference
      Node probe = n;
      probe.attributes.erase(key);
      QAItem q;
      q.fact_id = make_fact_id(img, FactKind::attribute, n.id, key, "");
      q.kind = QueryKind::attribute_query;
      q.subject = n.id;
      q.answer = value;
      try {
        auto d = minimal_disambiguating_attributes(probe, comps);
        q.disambiguator = std::move(d.keys);
        q.ambiguous = d.ambiguous;
      } catch (const UndisambiguableError&) {
        q.ambiguous = true;
      }
      q.question = "What is the " + key + " of " + reference(n, q.disambiguator) + "?";
      items.push_back(std::move(q));
    }
    if (!n.attributes.empty()) {
      QAItem q;
      q.fact_id = make_fact_id(img, FactKind::object, n.id, "", "");
      q.kind = QueryKind::object_retrieval;
      q.subject = n.id;
      q.answer = n.label;
      std::vector<std::string> vals;
      for (const auto& [k, v] : n.attributes) {
        q.disambiguator.push_back(k);
        vals.push_back(v);
      }
      q.question = "What object is " + enumerate_phrase(vals) + "?";
      items.push_back(std::move(q));
    }
  }
  for (const auto& e : g.edges()) {
    const Node& s = *g.find_node(e.source);
    const Node& o = *g.find_node(e.target);
    const auto sref = disambiguated_reference(g, s);
    const auto oref = disambiguated_reference(g, o);
    QAItem q;
    q.fact_id = make_fact_id(img, FactKind::relation, e.source, relation_key(e), e.target);
    q.kind = QueryKind::relation_query;
    q.subject = s.id;
    q.object = o.id;
    q.answer = relation_value(e);
    q.disambiguator = sref.keys;
    q.object_disambiguator = oref.keys;
    q.ambiguous = sref.ambiguous || oref.ambiguous;
    q.question = relation_question(relation_category(e.predicate_names()), sref.phrase, oref.phrase);
    items.push_back(std::move(q));
  }
  std::sort(items.begin(), items.end(), [](const QAItem& a, const QAItem& b) { return a.fact_id < b.fact_id; });
  return items;
}

nlohmann::ordered_json to_json(const QAItem& item) {
  nlohmann::ordered_json j;
  j["fact_id"] = item.fact_id;
  j["kind"] = to_string(item.kind);
  j["question"] = item.question;
  j["answer"] = item.answer;
  j["subject"] = item.subject;
  j["object"] = item.object;
  j["disambiguator"] = item.disambiguator;
  j["object_disambiguator"] = item.object_disambiguator;
  j["ambiguous"] = item.ambiguous;
  return j;
}

QAItem qa_item_from_json(const nlohmann::json& j) {
  try {
    QAItem q;
    q.fact_id = j.at("fact_id").get<std::string>();
    q.kind = query_kind_from_string(j.at("kind").get<std::string>());
    q.question = j.at("question").get<std::string>();
    q.answer = j.at("answer").get<std::string>();
    q.subject = j.at("subject").get<std::string>();
    q.object = j.at("object").get<std::string>();
    q.disambiguator = j.at("disambiguator").get<std::vector<std::string>>();
    q.object_disambiguator = j.at("object_disambiguator").get<std::vector<std::string>>();
    q.ambiguous = j.at("ambiguous").get<bool>();
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("QA item: ") + e.what());
  }
}

std::string qa_to_jsonl(const std::vector<QAItem>& items) {
  std::string out;
  for (const auto& q : items) out += to_json(q).dump() + "\n";
  return out;
}

std::vector<QAItem> qa_from_jsonl(std::string_view text) {
  std::vector<QAItem> items;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaError("QA jsonl: invalid line");
    items.push_back(qa_item_from_json(j));
  }
  return items;
}

}  // namespace xtc

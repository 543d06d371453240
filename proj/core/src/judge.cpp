#include "xtc/judge.hpp"

#include <cctype>
#include <spdlog/spdlog.h>

#include "xtc/taxonomy.hpp"
#include "xtc/text.hpp"

namespace xtc {

nlohmann::ordered_json to_json(const JudgeScore& s) {
  nlohmann::ordered_json j;
  j["fact_id"] = s.fact_id;
  j["raw"] = s.raw;
  j["normalized"] = s.normalized();
  if (s.rationale) j["rationale"] = *s.rationale;
  return j;
}

JudgeScore judge_score_from_json(const nlohmann::json& j) {
  JudgeScore s;
  try {
    s.fact_id = j.at("fact_id").get<std::string>();
    s.raw = j.at("raw").get<int>();
    if (j.contains("rationale")) s.rationale = j.at("rationale").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("judge score: ") + e.what());
  }
  if (s.raw < 0 || s.raw > kJudgeScaleMax) {
    throw InvariantError(s.fact_id, "judge score " + std::to_string(s.raw) + " outside 0..5");
  }
  return s;
}

std::string render_vqa_judge(std::string_view gt_answer, std::string_view pred_answer) {
  // pred first: a gt answer containing the literal placeholder must survive
  std::string out(kVqaJudgeTemplate);
  const auto p = out.find("{pred_answer}");
  out.replace(p, 13, pred_answer);
  const auto g = out.find("{gt_answer}");
  out.replace(g, 11, gt_answer);
  return out;
}

std::optional<std::string> lookup_predicted_value(const Fact& fact, const SceneGraph& pred,
                                                  const MatchResult& match) {
  const auto subject = match.pred_for(fact.subject);
  if (!subject) return std::nullopt;
  const Node* node = pred.find_node(*subject);
  if (!node) throw InputError("match names predicted node '" + *subject + "' absent from the graph");
  switch (fact.kind) {
    case FactKind::object:
      return node->label;
    case FactKind::attribute: {
      auto it = node->attributes.find(fact.key);
      return it == node->attributes.end() ? std::string() : it->second;
    }
    case FactKind::relation: {
      const auto object = match.pred_for(fact.object);
      if (!object) return std::nullopt;
      const Edge* e = pred.find_edge(*subject, *object);
      return e ? relation_value(*e) : std::string();
    }
  }
  return std::nullopt;
}

namespace {

std::string label_of(const SceneGraph& g, const std::string& id) {
  const Node* n = g.find_node(id);
  return n ? n->label : id;
}

std::string relation_statement(const Fact& f, const SceneGraph& gt) {
  const std::string s = label_of(gt, f.subject);
  const std::string o = label_of(gt, f.object);
  std::vector<std::string> preds;
  if (const Edge* e = gt.find_edge(f.subject, f.object)) preds = e->predicate_names();
  switch (relation_category(preds)) {
    case RelationCategory::spatial:
      return "the " + s + " is positioned " + f.value + " the " + o;
    case RelationCategory::locomotion:
      return "the " + s + " is moving " + f.value + " the " + o;
    case RelationCategory::social:
      return "the " + s + " is " + f.value + " the " + o + " in an interaction";
    case RelationCategory::posture:
    case RelationCategory::other:
      break;
  }
  return "the " + s + " is " + f.value + " the " + o;
}

}  // namespace

std::optional<std::string> render_generation_check(const Fact& fact, const SceneGraph& gt,
                                                   const std::optional<std::string>& predicted_value,
                                                   const MatchResult& match) {
  if (!match.pred_for(fact.subject)) return std::nullopt;
  if (fact.kind == FactKind::relation && !match.pred_for(fact.object)) return std::nullopt;
  std::string statement;
  switch (fact.kind) {
    case FactKind::object:
      statement = "there is a " + fact.value;
      break;
    case FactKind::attribute:
      statement = "the " + label_of(gt, fact.subject) + " has " + fact.key + " " + fact.value;
      break;
    case FactKind::relation:
      statement = relation_statement(fact, gt);
      break;
  }
  return "Does the generated image correctly show that " + statement + "? " +
         render_vqa_judge(fact.value, predicted_value.value_or(""));
}

int parse_judge_score(std::string_view r) {
  auto is_word = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  while (i < r.size()) {
    if (!is_digit(r[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < r.size() && is_digit(r[j])) ++j;
    const bool word_before = i > 0 && is_word(r[i - 1]);
    const bool word_after = j < r.size() && is_word(r[j]);
    if (word_before || word_after) {
      i = j;
      continue;
    }
    const std::string digits(r.substr(i, j - i));
    if (i > 0 && r[i - 1] == '-' && (i < 2 || !is_digit(r[i - 2]))) {
      throw JudgeParseError("judge score -" + digits + " outside 0..5");
    }
    if (j + 1 < r.size() && (r[j] == '.' || r[j] == ',') && is_digit(r[j + 1])) {
      throw JudgeParseError("judge score is not an integer: '" + std::string(r.substr(i, j + 2 - i)) + "'");
    }
    if (digits.size() > 1 || digits[0] > '5') throw JudgeParseError("judge score " + digits + " outside 0..5");
    return digits[0] - '0';
  }
  throw JudgeParseError("no judge score in response");
}

int mock_judge(std::string_view gt, std::string_view pred) {
  if (to_lower(trim(gt)) == to_lower(trim(pred))) return kJudgeScaleMax;
  const auto a = token_set(gt);
  const auto b = token_set(pred);
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  const std::size_t uni = a.size() + b.size() - inter;
  if (uni == 0) return 0;
  // floor(5 * inter / uni + 1/2) in integers
  return static_cast<int>((10 * inter + uni) / (2 * uni));
}

int LlmJudge::score(const JudgeRequest& request) {
  std::string last_error;
  for (int attempt = 0; attempt < attempts_; ++attempt) {
    const std::string reply = chat_.chat({request.prompt, {}, true});
    try {
      return parse_judge_score(reply);
    } catch (const JudgeParseError& e) {
      last_error = e.what();
      spdlog::warn("judge reply for {} unparseable (attempt {}): {}", request.fact_id, attempt + 1, last_error);
    }
  }
  throw JudgeParseError("fact " + request.fact_id + ": " + last_error);
}

JudgeScore judge_fact(Judge& judge, const JudgeRequest& request) {
  if (trim(request.pred).empty() || trim(request.gt).empty()) {
    return {request.fact_id, 0, std::string("empty answer")};
  }
  const int raw = judge.score(request);
  if (raw < 0 || raw > kJudgeScaleMax) {
    throw InvariantError(request.fact_id, "judge returned " + std::to_string(raw));
  }
  return {request.fact_id, raw, std::nullopt};
}

void ScoreLedger::add(JudgeScore score) {
  if (score.raw < 0 || score.raw > kJudgeScaleMax) {
    throw InvariantError(score.fact_id, "judge score outside 0..5");
  }
  const std::string id = score.fact_id;
  if (!scores_.emplace(id, std::move(score)).second) {
    throw InvariantError(id, "fact scored twice");
  }
}

const JudgeScore* ScoreLedger::find(std::string_view fact_id) const {
  auto it = scores_.find(fact_id);
  return it == scores_.end() ? nullptr : &it->second;
}

std::size_t ScoreLedger::size() const { return scores_.size(); }

std::vector<JudgeScore> ScoreLedger::scores() const {
  std::vector<JudgeScore> out;
  out.reserve(scores_.size());
  for (const auto& [_, s] : scores_) out.push_back(s);
  return out;
}

std::string ScoreLedger::to_jsonl() const {
  std::string out;
  for (const auto& [_, s] : scores_) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

ScoreLedger ScoreLedger::from_jsonl(std::string_view text) {
  ScoreLedger ledger;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("score ledger line " + std::to_string(line_no) + ": " + e.what());
    }
    ledger.add(judge_score_from_json(j));
  }
  return ledger;
}

}  // namespace xtc

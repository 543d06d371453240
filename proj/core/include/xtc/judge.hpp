#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xtc/error.hpp"
#include "xtc/facts.hpp"
#include "xtc/graph_match.hpp"
#include "xtc/model_client.hpp"

namespace xtc {

inline constexpr int kJudgeScaleMax = 5;

struct JudgeScore {
  std::string fact_id;
  int raw = 0;
  std::optional<std::string> rationale;

  double normalized() const noexcept { return static_cast<double>(raw) / kJudgeScaleMax; }
  bool operator==(const JudgeScore&) const = default;
};

nlohmann::ordered_json to_json(const JudgeScore& s);
JudgeScore judge_score_from_json(const nlohmann::json& j);

inline constexpr std::string_view kVqaJudgeTemplate =
    "Compare the ground-truth answer: {gt_answer} with the predicted answer: {pred_answer}. Assign a "
    "score from 0 to 5 based on semantic equivalence. 0 means fully wrong, 5 means fully correct.";
inline constexpr std::string_view kGenerationCheckVersion = "gen-check/1";

std::string render_vqa_judge(std::string_view gt_answer, std::string_view pred_answer);

/// Value the predicted graph states for `fact`, looked up through the node mapping.
/// nullopt when the subject (or, for relations, either endpoint) is unmatched;
/// "" when the matched counterpart does not state the value.
std::optional<std::string> lookup_predicted_value(const Fact& fact, const SceneGraph& pred,
                                                  const MatchResult& match);

/// Verification question for a generated fact followed by the answer comparison.
/// nullopt when the fact's nodes are unmatched (the fact then scores 0).
std::optional<std::string> render_generation_check(const Fact& fact, const SceneGraph& gt,
                                                   const std::optional<std::string>& predicted_value,
                                                   const MatchResult& match);

class JudgeParseError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// First standalone integer in the text. Throws JudgeParseError when there is none,
/// when it is outside 0..5, or when it is a signed or fractional number.
int parse_judge_score(std::string_view response);

/// 5 for a case-insensitive exact match, otherwise round-half-up(5 * token Jaccard).
int mock_judge(std::string_view gt, std::string_view pred);

struct JudgeRequest {
  std::string fact_id;
  std::string prompt;
  std::string gt;
  std::string pred;
};

class Judge {
 public:
  virtual ~Judge() = default;
  virtual int score(const JudgeRequest& request) = 0;
};

class MockJudge : public Judge {
 public:
  int score(const JudgeRequest& request) override { return mock_judge(request.gt, request.pred); }
};

/// Sends the rendered prompt to a chat model. An unparseable reply is retried once.
class LlmJudge : public Judge {
 public:
  explicit LlmJudge(ChatClient& chat, int attempts = 2) : chat_(chat), attempts_(attempts) {}
  int score(const JudgeRequest& request) override;

 private:
  ChatClient& chat_;
  int attempts_;
};

/// Applies the empty-answer rule (raw 0, no judge call) and otherwise asks `judge`.
JudgeScore judge_fact(Judge& judge, const JudgeRequest& request);

/// Per-fact scores of one task; a fact may be scored at most once. Not synchronized.
class ScoreLedger {
 public:
  void add(JudgeScore score);
  const JudgeScore* find(std::string_view fact_id) const;
  std::size_t size() const;
  std::vector<JudgeScore> scores() const;  // by fact_id

  std::string to_jsonl() const;
  static ScoreLedger from_jsonl(std::string_view text);

 private:
  std::map<std::string, JudgeScore, std::less<>> scores_;
};

}  // namespace xtc

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellbench/adapter.hpp"
#include "cellbench/dataset.hpp"
#include "cellbench/knowledge.hpp"

namespace cellbench {

/// The tuple scored by the judge: prompt q, standardized response r, knowledge K, truth g.
struct EvaluationInstance {
  std::string instance_id;
  std::string question;
  ModelResponse response;
  KnowledgeBundle knowledge;
  GroundTruth truth;

  Task task() const noexcept { return response.task; }
  /// Throws Schema when a component is missing or r and K disagree on the task.
  void validate() const;
};

inline constexpr std::size_t kDefaultJudgeTokenBudget = 6000;

struct JudgePrompt {
  std::string text;
  bool truncated = false;
  std::size_t evidence_kept = 0;
};

/// Whitespace-delimited word count, used as the token estimate for the budget.
std::size_t approx_tokens(std::string_view text);

/// Deterministic judge prompt. Evidence items are dropped from the tail until the prompt
/// fits `token_budget`; at least one item is always kept.
JudgePrompt render_judge_prompt(const EvaluationInstance& instance,
                                std::size_t token_budget = kDefaultJudgeTokenBudget);

struct ParsedRating {
  int rating = 0;
  std::string rationale;
};

/// First "Rating:" integer in [0,5] plus a non-empty rationale, or nullopt.
std::optional<ParsedRating> parse_rating(std::string_view reply);

/// Exact 20 x rating. Throws Domain outside [0,5].
int rescale(int rating);

struct JudgeVerdict {
  std::string instance_id;
  Task task = Task::CTA;
  int rating = 0;
  int score = 0;
  std::string rationale;
  std::string judge_model;
  std::int64_t seed = 0;
  std::string prompt_hash;
  bool truncated = false;
  std::vector<std::pair<Source, std::string>> evidence;
  std::size_t cache_hits = 0;
  std::size_t cache_lookups = 0;
  bool flagged = false;
  std::string flag_reason;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

/// Queries the judge at temperature 0 with `seed`; one stricter retry on an unparsable reply.
/// Throws JudgeFormat when the retry fails too; transport errors propagate.
JudgeVerdict judge_instance(ChatClient& judge, const EvaluationInstance& instance, std::int64_t seed,
                            std::size_t token_budget = kDefaultJudgeTokenBudget);

/// A rating-0 verdict excluded from means, recorded with the reason.
JudgeVerdict flagged_verdict(std::string instance_id, Task task, std::string reason, std::string judge_model,
                             std::int64_t seed);

/// Mean score over unflagged verdicts, rounded to two decimals. Throws Aggregation when none.
double aggregate_task(std::span<const JudgeVerdict> verdicts);

/// Unweighted sum over all five tasks. Throws PartialTotal naming the missing tasks.
double total_score(const std::map<Task, double>& task_means);

/// "%.2f"
std::string format_score(double value);

nlohmann::json to_json(const JudgeVerdict& verdict);
JudgeVerdict verdict_from_json(const nlohmann::json& j);

}  // namespace cellbench

#include "cellbench/judge.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "cellbench/cache.hpp"
#include "cellbench/error.hpp"
#include "cellbench/templates.hpp"
#include "cellbench/text.hpp"

namespace cellbench {

using nlohmann::json;

void EvaluationInstance::validate() const {
  if (instance_id.empty()) throw Error(ErrorKind::Schema, "evaluation instance has no id");
  if (text::trim(question).empty()) throw Error(ErrorKind::Schema, instance_id + ": empty question");
  if (knowledge.items.empty()) throw Error(ErrorKind::Schema, instance_id + ": empty knowledge bundle");
  if (knowledge.task != response.task)
    throw Error(ErrorKind::Schema, instance_id + ": response task " + std::string(to_string(response.task)) +
                                       " differs from knowledge task " + std::string(to_string(knowledge.task)));
}

std::size_t approx_tokens(std::string_view s) { return text::split_whitespace(s).size(); }

namespace {

std::string render_response(const ModelResponse& r) {
  if (const auto* p = std::get_if<CellTypePrediction>(&r.payload)) return "Predicted cell type: " + p->label;
  return to_schema_text(r);
}

std::string with_curie(const std::string& label, const std::string& curie) {
  return curie.empty() ? label : label + " (" + curie + ")";
}

std::string render_truth(const GroundTruth& truth) {
  struct Visitor {
    std::string operator()(const OntologyLabel& t) const { return "Reference cell type: " + with_curie(t.label, t.curie); }
    std::string operator()(const CaptionTruth& t) const {
      return "Reference cell type: " + with_curie(t.cell_type, t.curie) + "\nReference caption: " + t.caption;
    }
    std::string operator()(const GeneratedCellTruth& t) const {
      std::string s = "Reference cell sentence: " + text::join(t.reference.genes, " ");
      if (!t.curie.empty()) s = "Reference cell type: " + t.curie + "\n" + s;
      return s;
    }
    std::string operator()(const PerturbationCase& t) const {
      return "Perturbation: " + t.perturbation_id + " (targets: " + text::join(t.targets, ", ") +
             ")\nReference up-regulated genes: " + text::join(t.up_genes, ", ") +
             "\nReference down-regulated genes: " + text::join(t.down_genes, ", ");
    }
    std::string operator()(const QaTruth& t) const { return "Reference answer: " + t.answer; }
  };
  return std::visit(Visitor{}, truth);
}

std::string render_item(std::size_t index, const EvidenceItem& item) {
  return std::to_string(index + 1) + ". [" + std::string(to_string(item.source)) + " " + item.key + "] " + item.text;
}

std::string render_knowledge(const std::vector<EvidenceItem>& items, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    out += render_item(i, items[i]);
    if (i + 1 < count) out += '\n';
  }
  return out;
}

std::string render_with(const EvaluationInstance& instance, std::size_t count) {
  const auto task = text::to_lower(to_string(instance.task()));
  return fill_template(get_template("judge_frame"),
                       {{"task_description", std::string(text::trim(get_template(task + "_task")))},
                        {"question", instance.question},
                        {"response", render_response(instance.response)},
                        {"ground_truth", render_truth(instance.truth)},
                        {"knowledge", render_knowledge(instance.knowledge.items, count)},
                        {"rubric", std::string(text::trim(get_template(task + "_rubric")))}});
}

// Position just past "label:" matched case-insensitively, or npos.
std::size_t after_label(const std::string& lowered, std::string_view label, std::size_t from = 0) {
  const auto pos = lowered.find(label, from);
  if (pos == std::string::npos) return pos;
  auto cursor = pos + label.size();
  while (cursor < lowered.size() && (lowered[cursor] == ' ' || lowered[cursor] == '*')) ++cursor;
  if (cursor < lowered.size() && lowered[cursor] == ':') return cursor + 1;
  return after_label(lowered, label, pos + 1);
}

}  // namespace

JudgePrompt render_judge_prompt(const EvaluationInstance& instance, std::size_t token_budget) {
  instance.validate();
  const auto total = instance.knowledge.items.size();
  JudgePrompt prompt;
  prompt.evidence_kept = total;
  prompt.text = render_with(instance, total);
  if (approx_tokens(prompt.text) <= token_budget) return prompt;

  // Fixed part costs the same whatever the evidence count, so only item costs vary.
  const std::size_t fixed = approx_tokens(render_with(instance, 0));
  std::size_t used = fixed;
  std::size_t kept = 0;
  for (; kept < total; ++kept) {
    const auto cost = approx_tokens(render_item(kept, instance.knowledge.items[kept]));
    if (kept > 0 && used + cost > token_budget) break;
    used += cost;
  }
  prompt.evidence_kept = std::max<std::size_t>(kept, 1);
  prompt.truncated = prompt.evidence_kept < total;
  prompt.text = render_with(instance, prompt.evidence_kept);
  return prompt;
}

std::optional<ParsedRating> parse_rating(std::string_view reply) {
  const std::string raw(reply);
  const auto lowered = text::to_lower(raw);
  auto cursor = after_label(lowered, "rating");
  if (cursor == std::string::npos) return std::nullopt;
  while (cursor < raw.size() && (raw[cursor] == ' ' || raw[cursor] == '*' || raw[cursor] == '\t')) ++cursor;
  std::size_t end = cursor;
  while (end < raw.size() && !std::isspace(static_cast<unsigned char>(raw[end]))) ++end;
  auto token = std::string(raw.substr(cursor, end - cursor));
  while (!token.empty() && (token.back() == '*' || token.back() == ',' || token.back() == '.')) token.pop_back();
  if (auto slash = token.find('/'); slash != std::string::npos) token = token.substr(0, slash);
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); }))
    return std::nullopt;
  if (token.size() > 1) return std::nullopt;
  const int rating = token[0] - '0';
  if (rating > 5) return std::nullopt;

  std::string rationale;
  const auto label = after_label(lowered, "rationale", end);
  if (label != std::string::npos) {
    rationale = text::collapse_whitespace(std::string_view(raw).substr(label));
  } else {
    rationale = text::collapse_whitespace(std::string_view(raw).substr(end));
  }
  if (rationale.empty()) return std::nullopt;
  return ParsedRating{rating, rationale};
}

int rescale(int rating) {
  if (rating < 0 || rating > 5) throw Error(ErrorKind::Domain, "rating " + std::to_string(rating) + " outside [0,5]");
  return 20 * rating;
}

JudgeVerdict judge_instance(ChatClient& judge, const EvaluationInstance& instance, std::int64_t seed,
                            std::size_t token_budget) {
  const auto prompt = render_judge_prompt(instance, token_budget);
  ChatRequest request;
  request.model = judge.spec().model;
  request.temperature = 0.0;
  request.seed = seed;
  request.messages = {{"user", prompt.text}};

  auto parsed = parse_rating(judge.complete(request, instance.instance_id));
  if (!parsed) {
    spdlog::warn("{}: judge reply unparsable, retrying with a format reminder", instance.instance_id);
    request.messages.back().content += std::string(get_template("judge_reminder"));
    parsed = parse_rating(judge.complete(request, instance.instance_id));
  }
  if (!parsed) throw Error(ErrorKind::JudgeFormat, instance.instance_id + ": no valid Rating in judge reply");

  JudgeVerdict v;
  v.instance_id = instance.instance_id;
  v.task = instance.task();
  v.rating = parsed->rating;
  v.score = rescale(parsed->rating);
  v.rationale = parsed->rationale;
  v.judge_model = request.model;
  v.seed = seed;
  v.prompt_hash = sha256_hex(prompt.text);
  v.truncated = prompt.truncated;
  for (std::size_t i = 0; i < prompt.evidence_kept; ++i) {
    const auto& item = instance.knowledge.items[i];
    v.evidence.emplace_back(item.source, item.key);
  }
  v.cache_hits = instance.knowledge.cache_hits;
  v.cache_lookups = instance.knowledge.cache_lookups;
  return v;
}

JudgeVerdict flagged_verdict(std::string instance_id, Task task, std::string reason, std::string judge_model,
                             std::int64_t seed) {
  JudgeVerdict v;
  v.instance_id = std::move(instance_id);
  v.task = task;
  v.rationale = reason;
  v.judge_model = std::move(judge_model);
  v.seed = seed;
  v.flagged = true;
  v.flag_reason = std::move(reason);
  return v;
}

double aggregate_task(std::span<const JudgeVerdict> verdicts) {
  long long sum = 0;
  std::size_t n = 0;
  for (const auto& v : verdicts) {
    if (v.flagged) continue;
    sum += v.score;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::Aggregation, "no valid verdicts to aggregate");
  return std::round(static_cast<double>(sum) * 100.0 / static_cast<double>(n)) / 100.0;
}

double total_score(const std::map<Task, double>& task_means) {
  std::vector<std::string> missing;
  double total = 0.0;
  for (auto task : kAllTasks) {
    const auto it = task_means.find(task);
    if (it == task_means.end()) {
      missing.emplace_back(to_string(task));
    } else {
      total += it->second;
    }
  }
  if (!missing.empty()) throw Error(ErrorKind::PartialTotal, "missing task scores: " + text::join(missing, ", "));
  return std::round(total * 100.0) / 100.0;
}

std::string format_score(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

json to_json(const JudgeVerdict& v) {
  auto evidence = json::array();
  for (const auto& [source, key] : v.evidence) evidence.push_back({{"source", to_string(source)}, {"key", key}});
  return {{"instance_id", v.instance_id},
          {"task", to_string(v.task)},
          {"rating", v.rating},
          {"score", v.score},
          {"rationale", v.rationale},
          {"judge_model", v.judge_model},
          {"seed", v.seed},
          {"prompt_hash", v.prompt_hash},
          {"truncated", v.truncated},
          {"evidence", std::move(evidence)},
          {"cache", {{"hits", v.cache_hits}, {"lookups", v.cache_lookups}}},
          {"flagged", v.flagged},
          {"flag_reason", v.flag_reason}};
}

JudgeVerdict verdict_from_json(const json& j) {
  try {
    JudgeVerdict v;
    v.instance_id = j.at("instance_id").get<std::string>();
    const auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw Error(ErrorKind::Schema, "unknown task in verdict " + v.instance_id);
    v.task = *task;
    v.rating = j.at("rating").get<int>();
    v.score = j.at("score").get<int>();
    v.rationale = j.at("rationale").get<std::string>();
    v.judge_model = j.value("judge_model", std::string());
    v.seed = j.value("seed", std::int64_t{0});
    v.prompt_hash = j.value("prompt_hash", std::string());
    v.truncated = j.value("truncated", false);
    for (const auto& e : j.value("evidence", json::array())) {
      const auto source = parse_source(e.at("source").get<std::string>());
      if (!source) throw Error(ErrorKind::Schema, "unknown evidence source in verdict " + v.instance_id);
      v.evidence.emplace_back(*source, e.at("key").get<std::string>());
    }
    if (j.contains("cache")) {
      v.cache_hits = j["cache"].value("hits", std::size_t{0});
      v.cache_lookups = j["cache"].value("lookups", std::size_t{0});
    }
    v.flagged = j.value("flagged", false);
    v.flag_reason = j.value("flag_reason", std::string());
    if (v.rating < 0 || v.rating > 5 || v.score != 20 * v.rating)
      throw Error(ErrorKind::Schema, "inconsistent rating/score in verdict " + v.instance_id);
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed verdict record: ") + e.what());
  }
}

}  // namespace cellbench

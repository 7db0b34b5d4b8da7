#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellbench/adapter.hpp"
#include "cellbench/cache.hpp"
#include "cellbench/config.hpp"
#include "cellbench/dataset.hpp"
#include "cellbench/judge.hpp"
#include "cellbench/knowledge.hpp"
#include "cellbench/ontology.hpp"
#include "cellbench/report.hpp"

namespace cellbench {

/// One line of responses/<TASK>.jsonl: a standardized response or the reason there is none.
struct ResponseRecord {
  std::string instance_id;
  Task task = Task::CTA;
  std::string prompt_hash;
  std::optional<ModelResponse> response;
  std::string flag_reason;

  bool flagged() const noexcept { return !response.has_value(); }
};

nlohmann::json to_json(const ResponseRecord& record);
ResponseRecord response_record_from_json(const nlohmann::json& j);

/// Shared, read-only state of a run: config, ontology, knowledge sources, cache and run log.
class RunContext {
 public:
  explicit RunContext(RunConfig config);
  ~RunContext();
  RunContext(const RunContext&) = delete;
  RunContext& operator=(const RunContext&) = delete;

  const RunConfig& config() const noexcept { return config_; }
  const OntologyGraph& graph() const noexcept { return graph_; }
  const CellMarkerTable& markers() const noexcept { return markers_; }
  const KnowledgeSources& knowledge() const noexcept { return sources_; }
  TermSearch* term_search() const noexcept { return sources_.term_search; }
  RunLog& log() noexcept { return *log_; }

  /// Instances of the task's dataset, sorted by id. Throws Config when no dataset is configured.
  std::vector<TaskInstance> load_instances(Task task) const;

  std::filesystem::path responses_path(Task task) const;
  std::filesystem::path verdicts_path(Task task) const;

 private:
  struct Remote;

  RunConfig config_;
  OntologyGraph graph_;
  CellMarkerTable markers_;
  std::unique_ptr<GeneAnnotationTable> annotations_;
  std::unique_ptr<ResponseCache> cache_;
  std::unique_ptr<Remote> remote_;
  KnowledgeSources sources_;
  std::unique_ptr<RunLog> log_;
};

/// Answer generation for every instance of `task`, resuming from the responses journal.
/// The finished journal is rewritten sorted by instance id.
std::vector<ResponseRecord> generate_responses(RunContext& ctx, Task task);

/// Knowledge retrieval and judging, resuming from the verdicts journal. Instances without a
/// usable response, bundle or judge rating become flagged verdicts. Throws RunFailure when the
/// flagged share exceeds the configured bound (the journal is written first).
std::vector<JudgeVerdict> judge_responses(RunContext& ctx, Task task, std::span<const ResponseRecord> responses);

/// generate_responses followed by judge_responses.
std::vector<JudgeVerdict> run_task(RunContext& ctx, Task task);

std::vector<ResponseRecord> load_responses(const std::filesystem::path& path);
std::vector<JudgeVerdict> load_verdicts(const std::filesystem::path& path);

/// Assembles per-task summaries, validation analyses and provenance from finished journals.
BenchmarkReport build_report(const RunContext& ctx, const std::map<Task, std::vector<JudgeVerdict>>& verdicts,
                             const std::map<Task, std::vector<ResponseRecord>>& responses);

// Build-stage helpers turning ingested corpora into task instances.

/// One CTA instance per sentence; the gold label comes from metadata "cell_type"
/// (and "cell_ontology_id" when present).
std::vector<TaskInstance> build_cta_instances(std::span<const CellSentence> sentences);
/// One CG instance per cell-type sentence (typically a mean profile per type).
std::vector<TaskInstance> build_cg_instances(std::span<const CellSentence> type_sentences);
std::vector<TaskInstance> build_pp_instances(std::span<const PerturbationCase> cases);

}  // namespace cellbench

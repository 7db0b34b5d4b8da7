#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellbench/judge.hpp"
#include "cellbench/task.hpp"
#include "cellbench/validation.hpp"

namespace cellbench {

struct TaskSummary {
  Task task = Task::CTA;
  std::optional<double> mean;
  std::size_t instances = 0;
  std::size_t scored = 0;
  std::size_t flagged = 0;
  std::map<std::string, std::size_t> flag_reasons;  // by error category
  std::string note;
};

/// Mean over unflagged verdicts plus flag counts; mean stays empty (with a note) when none scored.
TaskSummary summarize_task(Task task, std::span<const JudgeVerdict> verdicts);

struct Provenance {
  std::string config_hash;
  std::string template_version;
  std::string model;
  std::string judge_model;
  std::int64_t seed = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_lookups = 0;
  std::map<std::string, std::string> journal_sha256;  // journal file name -> digest
};

struct BenchmarkReport {
  std::string model;
  std::map<Task, TaskSummary> tasks;
  std::optional<double> total;
  std::string total_note;
  std::vector<PairedAnalysis> analyses;
  std::vector<CrossJudgeResult> robustness;
  std::optional<DepthHistogram> depth_histogram;
  Provenance provenance;
};

/// Sets `total` when all five means exist, otherwise records which are missing.
void compute_total(BenchmarkReport& report);

nlohmann::json to_json(const BenchmarkReport& report);

/// Model | CTA | CG | CC | PP | SQA | Total, one row per report, "—" for absent cells.
std::string render_score_table(std::span<const BenchmarkReport> reports);
std::string render_markdown(const BenchmarkReport& report);

enum class ReportFormat { Json, Markdown, Csv };

/// Comma-separated list of json, markdown (md), csv. Throws Config on unknown names.
std::set<ReportFormat> parse_formats(std::string_view list);

/// Writes report.json, report.md and CSV plot data under `dir`. Throws Io when unwritable.
void emit_report(const BenchmarkReport& report, const std::filesystem::path& dir,
                 const std::set<ReportFormat>& formats);

}  // namespace cellbench

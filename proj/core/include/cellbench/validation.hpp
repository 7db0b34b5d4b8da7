#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellbench/adapter.hpp"
#include "cellbench/dataset.hpp"
#include "cellbench/judge.hpp"
#include "cellbench/knowledge.hpp"
#include "cellbench/metrics.hpp"
#include "cellbench/ontology.hpp"

namespace cellbench {

/// Judge scores paired with an external quantity, plus the rank statistics over them.
struct PairedAnalysis {
  std::string name;
  std::string value_label;
  std::vector<std::string> ids;
  std::vector<double> scores;
  std::vector<double> values;
  std::size_t excluded = 0;
  std::optional<CorrelationResult> spearman;
  std::optional<double> kendall;
  std::string skipped;  // reason when no statistic could be computed

  std::size_t n() const noexcept { return ids.size(); }
};

/// Computes spearman/kendall over the collected pairs, or records why it could not.
void finalize(PairedAnalysis& analysis);

using ResponseMap = std::map<std::string, ModelResponse>;

/// Score against negative ontology distance between predicted and gold labels.
PairedAnalysis validate_cta(std::span<const JudgeVerdict> verdicts, const ResponseMap& responses,
                            std::span<const TaskInstance> instances, const OntologyGraph& graph,
                            TermSearch* search = nullptr);

/// Score against the percentage of generated genes that are curated markers of the gold type.
PairedAnalysis validate_cg(std::span<const JudgeVerdict> verdicts, const ResponseMap& responses,
                           std::span<const TaskInstance> instances, const OntologyGraph& graph,
                           const CellMarkerTable& markers, TermSearch* search = nullptr);

/// Score against cosine of predicted and reference DEG sets (up and down pooled).
PairedAnalysis validate_pp(std::span<const JudgeVerdict> verdicts, const ResponseMap& responses,
                           std::span<const TaskInstance> instances);

/// Score against whitespace token count of the raw reply.
PairedAnalysis length_bias(std::span<const JudgeVerdict> verdicts, const ResponseMap& responses);

struct CrossJudgeResult {
  std::string name;
  std::size_t n = 0;
  std::size_t excluded = 0;
  std::optional<double> rho;
  std::optional<double> tau;
  double cosine = 0.0;
  std::string note;
};

/// Aligns two verdict sets by instance id. Throws Alignment listing ids present in only one.
/// Pairs flagged in either run are left out.
CrossJudgeResult robustness_cross_judge(std::span<const JudgeVerdict> run_a, std::span<const JudgeVerdict> run_b);

struct HistogramBin {
  int lo = 0;  // inclusive
  int hi = 0;  // exclusive
  std::size_t count = 0;
};

struct DepthHistogram {
  int bin_width = 2;
  std::vector<HistogramBin> bins;  // contiguous from the lowest to the highest occupied bin
  std::size_t misses = 0;
  std::size_t total = 0;
};

/// Bins depth-to-root of each resolvable label into [a, a + width) intervals.
/// Throws Domain for a non-positive width.
DepthHistogram depth_histogram(std::span<const std::string> labels, const OntologyGraph& graph, int bin_width,
                               TermSearch* search = nullptr);

nlohmann::json to_json(const PairedAnalysis& analysis);
nlohmann::json to_json(const CrossJudgeResult& result);
nlohmann::json to_json(const DepthHistogram& histogram);

}  // namespace cellbench

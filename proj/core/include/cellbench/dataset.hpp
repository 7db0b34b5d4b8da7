#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellbench/corpus.hpp"
#include "cellbench/task.hpp"

namespace cellbench {

// Task inputs.
struct CellTypeQuery {
  std::string cell_type;
  friend bool operator==(const CellTypeQuery&, const CellTypeQuery&) = default;
};

struct PerturbationInput {
  CellSentence control_sentence;
  std::string perturbation_id;
  std::vector<std::string> targets;
  friend bool operator==(const PerturbationInput&, const PerturbationInput&) = default;
};

struct QuestionInput {
  std::string question;
  friend bool operator==(const QuestionInput&, const QuestionInput&) = default;
};

/// CellSentence for CTA/CC, CellTypeQuery for CG, PerturbationInput for PP, QuestionInput for SQA.
using TaskInput = std::variant<CellSentence, CellTypeQuery, PerturbationInput, QuestionInput>;

// Ground truths. `curie` fields are optional pre-resolved ontology ids (empty when absent).
struct OntologyLabel {
  std::string label;
  std::string curie;
  friend bool operator==(const OntologyLabel&, const OntologyLabel&) = default;
};

struct CaptionTruth {
  std::string caption;
  std::string cell_type;
  std::string curie;
  friend bool operator==(const CaptionTruth&, const CaptionTruth&) = default;
};

struct GeneratedCellTruth {
  CellSentence reference;
  std::string curie;
  friend bool operator==(const GeneratedCellTruth&, const GeneratedCellTruth&) = default;
};

struct QaTruth {
  std::string answer;
  std::string evidence;
  std::string abstract_text;
  std::string pmid;
  friend bool operator==(const QaTruth&, const QaTruth&) = default;
};

using GroundTruth = std::variant<OntologyLabel, CaptionTruth, GeneratedCellTruth, PerturbationCase, QaTruth>;

struct TaskInstance {
  Task task = Task::CTA;
  std::string id;
  TaskInput input;
  GroundTruth ground_truth;
  std::vector<std::string> knowledge_refs;

  /// Throws Schema when the payload variants do not belong to `task`.
  void validate() const;

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

nlohmann::json to_json(const CellSentence& sentence);
CellSentence cell_sentence_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PerturbationCase& pc);
PerturbationCase perturbation_case_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TaskInstance& instance);
/// Throws Schema on missing/unexpected fields or task/payload mismatch.
TaskInstance instance_from_json(const nlohmann::json& j);

/// JSON Lines: one instance per line. Blank lines are skipped.
/// Parse errors carry the 1-based line number; duplicate ids are a Schema error.
std::vector<TaskInstance> parse_dataset(std::istream& in);
std::vector<TaskInstance> load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, std::span<const TaskInstance> instances);
void save_dataset(const std::filesystem::path& path, std::span<const TaskInstance> instances);

/// The cell-type label carried by an instance's ground truth (or CG input), empty if none.
std::string truth_cell_type(const TaskInstance& instance);
/// The pre-resolved CURIE carried by the ground truth, empty if none.
std::string truth_curie(const TaskInstance& instance);

}  // namespace cellbench

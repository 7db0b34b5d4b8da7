#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace cellbench {

/// The five benchmark tasks.
enum class Task {
  CTA,  // cell type annotation: cell sentence -> ontology label
  CC,   // cell captioning: cell sentence -> description
  CG,   // cell generation: cell type name -> cell sentence
  PP,   // perturbation prediction: control sentence + perturbation -> DEGs
  SQA,  // scientific QA
};

inline constexpr std::array<Task, 5> kAllTasks = {Task::CTA, Task::CC, Task::CG, Task::PP, Task::SQA};

/// Column order of the leaderboard table.
inline constexpr std::array<Task, 5> kReportTaskOrder = {Task::CTA, Task::CG, Task::CC, Task::PP, Task::SQA};

std::string_view to_string(Task task) noexcept;
std::string_view long_name(Task task) noexcept;
std::optional<Task> parse_task(std::string_view name) noexcept;

}  // namespace cellbench

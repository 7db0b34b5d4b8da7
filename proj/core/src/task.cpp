#include "cellbench/task.hpp"

#include "cellbench/text.hpp"

namespace cellbench {

std::string_view to_string(Task task) noexcept {
  switch (task) {
    case Task::CTA: return "CTA";
    case Task::CC: return "CC";
    case Task::CG: return "CG";
    case Task::PP: return "PP";
    case Task::SQA: return "SQA";
  }
  return "?";
}

std::string_view long_name(Task task) noexcept {
  switch (task) {
    case Task::CTA: return "Cell Type Annotation";
    case Task::CC: return "Cell Captioning";
    case Task::CG: return "Cell Generation";
    case Task::PP: return "Perturbation Prediction";
    case Task::SQA: return "Scientific QA";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view name) noexcept {
  const auto upper = text::to_upper(text::trim(name));
  for (Task t : kAllTasks) {
    if (upper == to_string(t)) return t;
  }
  return std::nullopt;
}

}  // namespace cellbench

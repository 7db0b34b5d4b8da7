#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cellbench/corpus.hpp"
#include "cellbench/dataset.hpp"
#include "cellbench/pipeline.hpp"
#include "mock/mock_server.hpp"
#include "support/fixtures.hpp"

namespace fixtures {

/// Perturbation instances built from the bundled Adamson sample.
inline std::vector<cellbench::TaskInstance> adamson_pp_instances() {
  const auto cells = cellbench::read_expression_file(data_dir() / "samples" / "adamson_counts.triplets");
  std::ifstream cond(data_dir() / "samples" / "adamson_conditions.csv");
  const auto conditions = cellbench::read_cell_conditions(cond);
  cellbench::PerturbationBuildOptions options;
  options.control_label = "control";
  const auto cases = cellbench::build_perturbation_cases(cells, conditions, options);
  return cellbench::build_pp_instances(cases);
}

inline std::map<cellbench::Task, fs::path> demo_datasets(const fs::path& work) {
  using cellbench::Task;
  const auto pp = work / "pp_adamson.jsonl";
  if (!fs::exists(pp)) cellbench::save_dataset(pp, adamson_pp_instances());
  const auto ds = data_dir() / "datasets";
  return {{Task::CTA, ds / "cta_demo.jsonl"},
          {Task::CC, ds / "cc_demo.jsonl"},
          {Task::CG, ds / "cg_demo.jsonl"},
          {Task::PP, pp},
          {Task::SQA, ds / "sqa_demo.jsonl"}};
}

inline std::vector<cellbench::TaskInstance> all_instances(const std::map<cellbench::Task, fs::path>& datasets) {
  std::vector<cellbench::TaskInstance> out;
  for (const auto& [task, path] : datasets) {
    auto part = cellbench::load_dataset(path);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

/// Oracle model and rubric judge served on local ports.
struct MockEndpoints {
  cellbench::mock::OracleModel model;
  cellbench::mock::RubricJudge judge;
  cellbench::mock::ChatServer model_server;
  cellbench::mock::ChatServer judge_server;

  MockEndpoints(std::vector<cellbench::TaskInstance> instances, cellbench::mock::ModelBehaviour behaviour = {},
                int judge_noise = 0)
      : model(std::move(instances), &bundled_graph(), behaviour),
        judge(&bundled_graph(), judge_noise),
        model_server(std::ref(model)),
        judge_server(std::ref(judge)) {}
};

inline cellbench::RunConfig run_config(const std::map<cellbench::Task, fs::path>& datasets, const MockEndpoints& eps,
                                       const fs::path& work) {
  auto doc = config_json(datasets, eps.model_server.url(), eps.judge_server.url(), work);
  doc["model"]["retries"] = 1;
  doc["judge"]["retries"] = 1;
  return cellbench::config_from_json(doc, work);
}

/// run_task for each configured task, then the report.
inline cellbench::BenchmarkReport run_everything(cellbench::RunContext& ctx) {
  std::map<cellbench::Task, std::vector<cellbench::JudgeVerdict>> verdicts;
  std::map<cellbench::Task, std::vector<cellbench::ResponseRecord>> responses;
  for (const auto& [task, _] : ctx.config().datasets) {
    responses[task] = cellbench::generate_responses(ctx, task);
    verdicts[task] = cellbench::judge_responses(ctx, task, responses[task]);
  }
  return cellbench::build_report(ctx, verdicts, responses);
}

}  // namespace fixtures

// cellbench: ingest -> build -> run -> judge -> validate -> report.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cellbench/config.hpp"
#include "cellbench/corpus.hpp"
#include "cellbench/dataset.hpp"
#include "cellbench/error.hpp"
#include "cellbench/journal.hpp"
#include "cellbench/ontology.hpp"
#include "cellbench/pipeline.hpp"
#include "cellbench/report.hpp"
#include "cellbench/text.hpp"
#include "cellbench/validation.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cellbench;

namespace {

enum Exit { kOk = 0, kConfigError = 2, kRunFailure = 3, kIoError = 4 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Credential:
    case ErrorKind::Template:
    case ErrorKind::Schema:
    case ErrorKind::Parse:
    case ErrorKind::Link:
      return kConfigError;
    case ErrorKind::Io:
    case ErrorKind::Cache:
      return kIoError;
    default:
      return kRunFailure;
  }
}

struct Overrides {
  std::string config;
  std::vector<std::string> tasks;
  std::string model;
  std::string judge_model;
  std::optional<std::int64_t> seed;
  std::optional<int> concurrency;
  std::string cache_dir;
  std::string out;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--task", o.tasks, "Task(s): CTA, CC, CG, PP, SQA (default: every configured dataset)");
  cmd->add_option("--model", o.model, "Override the model-under-test name");
  cmd->add_option("--judge-model", o.judge_model, "Override the judge model name");
  cmd->add_option("--seed", o.seed, "Override the seed");
  cmd->add_option("--concurrency", o.concurrency, "Concurrent requests")->check(CLI::PositiveNumber);
  cmd->add_option("--cache-dir", o.cache_dir, "Knowledge cache directory");
  cmd->add_option("--out", o.out, "Output directory");
}

RunConfig resolve_config(const Overrides& o) {
  auto cfg = load_config(o.config);
  if (!o.model.empty()) {
    cfg.model.endpoint.model = o.model;
    cfg.model.label = o.model;
  }
  if (!o.judge_model.empty()) cfg.judge.model = o.judge_model;
  if (o.seed) cfg.seed = *o.seed;
  if (o.concurrency) cfg.concurrency = *o.concurrency;
  if (!o.cache_dir.empty()) cfg.cache_dir = fs::absolute(o.cache_dir);
  if (!o.out.empty()) cfg.output_dir = fs::absolute(o.out);
  cfg.validate(true);
  return cfg;
}

std::vector<Task> selected_tasks(const Overrides& o, const RunConfig& cfg) {
  std::vector<Task> tasks;
  if (o.tasks.empty()) {
    for (const auto t : kAllTasks) {
      if (cfg.datasets.contains(t)) tasks.push_back(t);
    }
    return tasks;
  }
  for (const auto& name : o.tasks) {
    const auto t = parse_task(text::to_upper(name));
    if (!t) throw Error(ErrorKind::Config, "unknown task '" + name + "'");
    if (!cfg.datasets.contains(*t)) throw Error(ErrorKind::Config, "no dataset configured for " + name);
    tasks.push_back(*t);
  }
  return tasks;
}

void write_lines(const fs::path& path, const std::vector<json>& lines) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_jsonl_atomic(path, lines);
}

// ingest ------------------------------------------------------------------------------------

struct IngestArgs {
  std::string matrix;
  std::string conditions;
  std::string labels;
  std::string control_label = "control";
  std::string ontology;
  std::string out;
  std::size_t k = kDefaultSentenceLength;
  double lfc = kDefaultLfcThreshold;
  std::size_t max_degs = kDefaultMaxDegsPerDirection;
  bool per_type = false;
};

std::map<std::string, std::string> read_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_cell_conditions(in);
}

int cmd_ingest(const IngestArgs& a) {
  const auto cells = read_expression_file(a.matrix);
  std::vector<json> lines;
  if (!a.conditions.empty()) {
    const auto conditions = read_map_file(a.conditions);
    PerturbationBuildOptions options{a.control_label, a.k, a.lfc, a.max_degs};
    for (const auto& pc : build_perturbation_cases(cells, conditions, options)) lines.push_back(to_json(pc));
    spdlog::info("{} perturbation cases from {} cells", lines.size(), cells.size());
  } else {
    const auto labels = read_map_file(a.labels);
    std::optional<OntologyGraph> graph;
    if (!a.ontology.empty()) {
      std::ifstream in(a.ontology);
      if (!in) throw Error(ErrorKind::Io, "cannot open " + a.ontology);
      graph = parse_obo(in);
    }
    const auto annotate = [&](CellSentence& s, const std::string& label) {
      s.metadata["cell_type"] = label;
      if (graph) {
        if (const auto id = resolve_term(*graph, label)) s.metadata["cell_ontology_id"] = *id;
      }
    };
    if (a.per_type) {
      std::map<std::string, std::vector<ExpressionProfile>> groups;
      for (const auto& c : cells) {
        if (const auto it = labels.find(c.cell_id); it != labels.end()) groups[it->second].push_back(c);
      }
      for (const auto& [label, members] : groups) {
        auto s = to_cell_sentence(mean_profile(members, label), a.k);
        annotate(s, label);
        lines.push_back(to_json(s));
      }
    } else {
      for (const auto& c : cells) {
        const auto it = labels.find(c.cell_id);
        if (it == labels.end()) continue;
        auto s = to_cell_sentence(c, a.k);
        annotate(s, it->second);
        lines.push_back(to_json(s));
      }
    }
    spdlog::info("{} cell sentences from {} cells", lines.size(), cells.size());
  }
  write_lines(a.out, lines);
  return kOk;
}

// build -------------------------------------------------------------------------------------

int cmd_build(const std::string& task_name, const std::string& input, const std::string& out) {
  const auto task = parse_task(text::to_upper(task_name));
  if (!task || *task == Task::CC || *task == Task::SQA)
    throw Error(ErrorKind::Config, "build supports CTA, CG and PP; got '" + task_name + "'");
  std::vector<TaskInstance> instances;
  const auto records = read_jsonl(input);
  if (*task == Task::PP) {
    std::vector<PerturbationCase> cases;
    for (const auto& j : records) cases.push_back(perturbation_case_from_json(j));
    instances = build_pp_instances(cases);
  } else {
    std::vector<CellSentence> sentences;
    for (const auto& j : records) sentences.push_back(cell_sentence_from_json(j));
    instances = *task == Task::CTA ? build_cta_instances(sentences) : build_cg_instances(sentences);
  }
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  save_dataset(out, instances);
  spdlog::info("{} {} instances written to {}", instances.size(), to_string(*task), out);
  return kOk;
}

// run / judge -------------------------------------------------------------------------------

int cmd_run(const Overrides& o) {
  RunContext ctx(resolve_config(o));
  for (const auto task : selected_tasks(o, ctx.config())) {
    const auto records = generate_responses(ctx, task);
    const auto flagged = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.flagged(); });
    std::cout << to_string(task) << ": " << records.size() << " responses, " << flagged << " unparsable\n";
  }
  return kOk;
}

int cmd_judge(const Overrides& o, const std::string& responses_dir) {
  RunContext ctx(resolve_config(o));
  int status = kOk;
  for (const auto task : selected_tasks(o, ctx.config())) {
    const auto source = responses_dir.empty()
                            ? ctx.responses_path(task)
                            : fs::path(responses_dir) / "responses" / (std::string(to_string(task)) + ".jsonl");
    if (!fs::exists(source))
      throw Error(ErrorKind::Io, "no responses for " + std::string(to_string(task)) + " at " + source.string());
    const auto responses = load_responses(source);
    try {
      const auto verdicts = judge_responses(ctx, task, responses);
      const auto summary = summarize_task(task, verdicts);
      std::cout << to_string(task) << ": mean " << (summary.mean ? format_score(*summary.mean) : "—") << " over "
                << summary.scored << " scored, " << summary.flagged << " flagged\n";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RunFailure) throw;
      std::cerr << e.what() << "\n";
      status = kRunFailure;
    }
  }
  return status;
}

// validate / report -------------------------------------------------------------------------

BenchmarkReport assemble(const RunContext& ctx, const std::vector<Task>& tasks, const std::string& against) {
  std::map<Task, std::vector<JudgeVerdict>> verdicts;
  std::map<Task, std::vector<ResponseRecord>> responses;
  for (const auto task : tasks) {
    if (fs::exists(ctx.verdicts_path(task))) verdicts[task] = load_verdicts(ctx.verdicts_path(task));
    if (fs::exists(ctx.responses_path(task))) responses[task] = load_responses(ctx.responses_path(task));
  }
  if (verdicts.empty()) throw Error(ErrorKind::Io, "no verdict journals under " + ctx.config().output_dir.string());
  auto report = build_report(ctx, verdicts, responses);
  if (!against.empty()) {
    for (const auto& [task, list] : verdicts) {
      const auto other = fs::path(against) / "verdicts" / (std::string(to_string(task)) + ".jsonl");
      if (!fs::exists(other)) continue;
      auto result = robustness_cross_judge(list, load_verdicts(other));
      result.name = "cross_run_" + text::to_lower(to_string(task));
      report.robustness.push_back(std::move(result));
    }
  }
  return report;
}

int cmd_validate(const Overrides& o, const std::string& against) {
  RunContext ctx(resolve_config(o));
  const auto report = assemble(ctx, selected_tasks(o, ctx.config()), against);
  const auto full = to_json(report);
  json out{{"analyses", full.at("analyses")}, {"robustness", full.at("robustness")}};
  if (full.contains("depth_histogram")) out["depth_histogram"] = full.at("depth_histogram");
  write_text_atomic(ctx.config().output_dir / "validation.json", out.dump(2) + "\n");
  for (const auto& a : report.analyses) {
    std::cout << a.name << ": n=" << a.n();
    if (a.spearman) std::cout << " rho=" << a.spearman->rho << " p=" << a.spearman->p;
    if (!a.skipped.empty()) std::cout << " skipped (" << a.skipped << ")";
    std::cout << "\n";
  }
  for (const auto& r : report.robustness) {
    std::cout << r.name << ": n=" << r.n << " rho=" << (r.rho ? std::to_string(*r.rho) : "undefined")
              << " tau=" << (r.tau ? std::to_string(*r.tau) : "undefined") << " cosine=" << r.cosine << "\n";
  }
  return kOk;
}

int cmd_report(const Overrides& o, const std::string& formats, const std::string& against) {
  RunContext ctx(resolve_config(o));
  const auto report = assemble(ctx, selected_tasks(o, ctx.config()), against);
  emit_report(report, ctx.config().output_dir, parse_formats(formats));
  const BenchmarkReport rows[] = {report};
  std::cout << render_score_table(rows);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cellbench: knowledge-grounded evaluation of single-cell language models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cellbench 0.1.0");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Expression matrix -> cell sentences or perturbation cases (JSONL)");
  ingest_cmd->add_option("--matrix", ingest.matrix, "Dense CSV or gene,cell,value triplets")
      ->required()
      ->check(CLI::ExistingFile);
  auto* cond_opt = ingest_cmd->add_option("--conditions", ingest.conditions, "cell,condition CSV (perturbation screens)")
                       ->check(CLI::ExistingFile);
  auto* label_opt =
      ingest_cmd->add_option("--labels", ingest.labels, "cell,cell_type CSV (annotated atlases)")->check(CLI::ExistingFile);
  cond_opt->excludes(label_opt);
  ingest_cmd->add_option("--control-label", ingest.control_label, "Condition label of control cells");
  ingest_cmd->add_option("--ontology", ingest.ontology, "OBO file used to attach ontology ids to labels")
      ->check(CLI::ExistingFile);
  ingest_cmd->add_flag("--per-type", ingest.per_type, "Emit one mean-profile sentence per label");
  ingest_cmd->add_option("--k", ingest.k, "Cell sentence length")->check(CLI::PositiveNumber);
  ingest_cmd->add_option("--deg-threshold", ingest.lfc, "|log2 fold change| threshold")->check(CLI::PositiveNumber);
  ingest_cmd->add_option("--max-degs", ingest.max_degs, "DEGs kept per direction")->check(CLI::PositiveNumber);
  ingest_cmd->add_option("--out", ingest.out, "Output JSONL")->required();

  std::string build_task, build_input, build_out;
  auto* build_cmd = app.add_subcommand("build", "Ingested JSONL -> task dataset");
  build_cmd->add_option("--task", build_task, "CTA, CG or PP")->required();
  build_cmd->add_option("--input", build_input, "Sentences (CTA, CG) or perturbation cases (PP)")
      ->required()
      ->check(CLI::ExistingFile);
  build_cmd->add_option("--out", build_out, "Dataset JSONL")->required();

  Overrides run_o, judge_o, validate_o, report_o;
  auto* run_cmd = app.add_subcommand("run", "Generate and standardize model answers");
  add_run_flags(run_cmd, run_o);

  std::string responses_dir;
  auto* judge_cmd = app.add_subcommand("judge", "Retrieve knowledge and score responses");
  add_run_flags(judge_cmd, judge_o);
  judge_cmd->add_option("--responses-from", responses_dir, "Output directory holding the responses to judge");

  std::string validate_against;
  auto* validate_cmd = app.add_subcommand("validate", "Validation and robustness analyses");
  add_run_flags(validate_cmd, validate_o);
  validate_cmd->add_option("--against", validate_against, "Second output directory for cross-run agreement");

  std::string formats = "json,md,csv", report_against;
  auto* report_cmd = app.add_subcommand("report", "Emit JSON, Markdown and CSV reports");
  add_run_flags(report_cmd, report_o);
  report_cmd->add_option("--format", formats, "Comma-separated subset of json,md,csv");
  report_cmd->add_option("--against", report_against, "Second output directory for cross-run agreement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  auto logger = spdlog::stderr_color_mt("cellbench");
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*ingest_cmd) {
      if (ingest.conditions.empty() && ingest.labels.empty())
        throw Error(ErrorKind::Config, "ingest needs --conditions or --labels");
      return cmd_ingest(ingest);
    }
    if (*build_cmd) return cmd_build(build_task, build_input, build_out);
    if (*run_cmd) return cmd_run(run_o);
    if (*judge_cmd) return cmd_judge(judge_o, responses_dir);
    if (*validate_cmd) return cmd_validate(validate_o, validate_against);
    if (*report_cmd) return cmd_report(report_o, formats, report_against);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRunFailure;
  }
  return kOk;
}

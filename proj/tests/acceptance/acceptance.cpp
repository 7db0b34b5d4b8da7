// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "cellbench/corpus.hpp"
#include "cellbench/judge.hpp"
#include "cellbench/knowledge.hpp"
#include "cellbench/metrics.hpp"
#include "cellbench/ontology.hpp"
#include "cellbench/pipeline.hpp"
#include "cellbench/report.hpp"
#include "cellbench/validation.hpp"
#include "mock/mock_server.hpp"
#include "support/cta_fixtures.hpp"
#include "support/harness.hpp"
#include "support/oracles.hpp"

using namespace cellbench;
namespace fs = std::filesystem;

namespace {

/// Collects failed checks of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
      std::ostringstream os;
      os << what << ": got " << got << ", want " << want << " +/- " << tol;
      failures_.push_back(os.str());
    }
  }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

struct Criterion {
  int number;
  std::string title;
  double limit_seconds;
  std::function<void(Check&)> body;
};

std::map<Task, double> means(double cta, double cg, double cc, double pp, double sqa) {
  return {{Task::CTA, cta}, {Task::CG, cg}, {Task::CC, cc}, {Task::PP, pp}, {Task::SQA, sqa}};
}

std::vector<double> tied_series(std::mt19937_64& rng, std::size_t n) {
  const int levels = 2 + static_cast<int>(rng() % 8);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng() % levels);
  return v;
}

void worked_example(Check& c) {
  const auto& g = fixtures::bundled_graph();
  c.expect(g.contains("CL:2000001") && g.contains("CL:0000623"), "subset holds both NK terms");
  const auto id = resolve_term(g, "Natural Killer (NK) Cell");
  c.expect(id == std::optional<std::string>("CL:0000623"), "resolve_term -> CL:0000623");
  c.expect(shortest_path_distance(g, "CL:0000623", "CL:2000001") == std::optional<int>(2), "distance == 2");
}

void rescale_and_totals(Check& c) {
  for (int r = 0; r <= 5; ++r) c.expect(rescale(r) == 20 * r, "rescale(" + std::to_string(r) + ")");
  c.near(total_score(means(40.00, 63.04, 67.89, 37.10, 69.13)), 277.16, 0.01, "Kimi-K2 total");
  c.near(total_score(means(40.81, 62.24, 66.51, 36.23, 70.87)), 276.66, 0.01, "DeepSeek-R1 total");
}

void graph_oracles(Check& c) {
  std::mt19937_64 rng(20240917);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dag = oracle::random_dag(rng, 50);
    const auto g = OntologyGraph::from_terms(dag.terms);
    const auto fw = oracle::floyd_warshall(dag.ids.size(), dag.edges);
    for (std::size_t i = 0; i < dag.ids.size(); ++i) {
      for (std::size_t j = 0; j < dag.ids.size(); ++j) {
        const auto d = shortest_path_distance(g, dag.ids[i], dag.ids[j]);
        const bool ok = fw[i][j] >= oracle::kInf ? !d.has_value() : d == std::optional<int>(fw[i][j]);
        if (!ok) c.expect(false, "trial " + std::to_string(trial) + " distance " + dag.ids[i] + "-" + dag.ids[j]);
      }
      const auto want = oracle::exhaustive_depth(static_cast<int>(i), dag.parents);
      if (!(want && depth_to_root(g, dag.ids[i]) == *want))
        c.expect(false, "trial " + std::to_string(trial) + " depth " + dag.ids[i]);
    }
  }
}

void statistic_oracles(Check& c) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = tied_series(rng, 20);
    const auto y = tied_series(rng, 20);
    const auto label = "series " + std::to_string(trial);
    c.near(spearman(x, y).rho, oracle::naive_spearman(x, y), 1e-9, label + " spearman");
    c.near(kendall_tau(x, y), oracle::naive_kendall(x, y), 1e-9, label + " kendall");
  }
}

void validation_property(Check& c) {
  const auto& g = fixtures::bundled_graph();
  const auto fx = fixtures::make_cta_fixtures(g, 50, 20250701);
  mock::RubricJudge rubric(&g);
  mock::ChatServer server(std::ref(rubric));
  EndpointSpec spec;
  spec.url = server.url();
  spec.model = "rubric-judge";
  spec.timeout = std::chrono::seconds(10);
  ChatClient judge(spec);

  std::vector<TaskInstance> instances;
  std::vector<JudgeVerdict> verdicts;
  ResponseMap responses;
  for (const auto& f : fx) {
    EvaluationInstance e;
    e.instance_id = f.instance.id;
    e.question = render_answer_prompt(f.instance);
    e.response = f.response;
    e.knowledge = retrieve_knowledge(f.instance, g, {});
    e.truth = f.instance.ground_truth;
    verdicts.push_back(judge_instance(judge, e, kDefaultSeed));
    instances.push_back(f.instance);
    responses[f.instance.id] = f.response;
  }
  const auto a = validate_cta(verdicts, responses, instances, g);
  c.expect(a.n() == 50, "50 pairs analysed, got " + std::to_string(a.n()));
  c.expect(a.spearman.has_value(), "spearman computed");
  if (a.spearman) {
    c.expect(a.spearman->rho >= 0.9, "rho >= 0.9, got " + std::to_string(a.spearman->rho));
    c.expect(a.spearman->p < 0.001, "p < 0.001, got " + std::to_string(a.spearman->p));
  }
}

void deg_construction(Check& c) {
  const auto expected =
      nlohmann::json::parse(fixtures::read_file(fixtures::data_dir() / "samples" / "expected_degs.json"));
  struct Screen {
    std::string key, matrix, conditions, control;
  };
  const Screen screens[] = {{"norman", "norman_counts.csv", "norman_conditions.csv", "ctrl"},
                            {"adamson", "adamson_counts.triplets", "adamson_conditions.csv", "control"}};
  std::size_t total = 0;
  for (const auto& s : screens) {
    const auto dir = fixtures::data_dir() / "samples";
    std::ifstream cond(dir / s.conditions);
    PerturbationBuildOptions options;
    options.control_label = s.control;
    const auto cases =
        build_perturbation_cases(read_expression_file(dir / s.matrix), read_cell_conditions(cond), options);
    const auto& want = expected.at(s.key).at("cases");
    c.expect(cases.size() == want.size(), s.key + " case count");
    for (const auto& pc : cases) {
      if (!want.contains(pc.perturbation_id)) {
        c.expect(false, s.key + " unexpected case " + pc.perturbation_id);
        continue;
      }
      const auto& w = want.at(pc.perturbation_id);
      c.expect(pc.up_genes == w.at("up").get<std::vector<std::string>>(), pc.perturbation_id + " up");
      c.expect(pc.down_genes == w.at("down").get<std::vector<std::string>>(), pc.perturbation_id + " down");
      for (const auto& gene : pc.up_genes) {
        if (std::find(pc.down_genes.begin(), pc.down_genes.end(), gene) != pc.down_genes.end())
          c.expect(false, pc.perturbation_id + " shares " + gene);
      }
    }
    total += cases.size();
  }
  c.expect(total == 138, "138 cases, got " + std::to_string(total));
}

std::map<std::string, std::string> report_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().filename().string()] = fixtures::read_file(e.path());
  }
  return out;
}

void determinism(Check& c) {
  fixtures::TempDir work;
  const auto datasets = fixtures::demo_datasets(work.path());
  fixtures::MockEndpoints eps(fixtures::all_instances(datasets), {.drift = true});
  const auto cfg = fixtures::run_config(datasets, eps, work.path());
  const auto formats = parse_formats("json,md,csv");

  std::vector<std::map<std::string, std::string>> runs;
  std::map<Task, std::vector<ResponseRecord>> responses;
  std::map<Task, std::vector<JudgeVerdict>> first_verdicts;
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(cfg.output_dir);
    fs::remove_all(cfg.cache_dir);
    RunContext ctx(cfg);
    std::map<Task, std::vector<JudgeVerdict>> verdicts;
    responses.clear();
    for (const auto& [task, _] : cfg.datasets) {
      responses[task] = generate_responses(ctx, task);
      verdicts[task] = judge_responses(ctx, task, responses[task]);
    }
    emit_report(build_report(ctx, verdicts, responses), cfg.output_dir / "report", formats);
    runs.push_back(report_files(cfg.output_dir / "report"));
    first_verdicts = verdicts;
  }
  c.expect(!runs[0].empty(), "report files written");
  c.expect(runs[0] == runs[1], "reports byte-identical across runs");

  auto reseeded = cfg;
  reseeded.seed = cfg.seed + 1;
  reseeded.output_dir = work.path() / "reseeded";
  RunContext ctx(reseeded);
  for (const auto& [task, list] : responses) {
    const auto again = judge_responses(ctx, task, list);
    const auto r = robustness_cross_judge(first_verdicts.at(task), again);
    c.expect(r.rho.has_value() && *r.rho == 1.0,
             std::string(to_string(task)) + " seed rho == 1.0" + (r.rho ? ", got " + std::to_string(*r.rho) : ""));
  }
}

void length_bias_null(Check& c) {
  std::mt19937_64 rng(314159);
  ResponseMap responses;
  std::vector<JudgeVerdict> verdicts;
  for (int i = 0; i < 100; ++i) {
    const auto id = "sqa-" + std::to_string(i);
    std::string raw;
    const auto words = 5 + rng() % 80;
    for (std::size_t w = 0; w < words; ++w) raw += "word ";
    ModelResponse r;
    r.task = Task::SQA;
    r.raw = raw;
    r.payload = AnswerPrediction{raw};
    responses[id] = r;
    JudgeVerdict v;
    v.instance_id = id;
    v.task = Task::SQA;
    v.rating = static_cast<int>(rng() % 6);
    v.score = rescale(v.rating);
    v.rationale = "r";
    verdicts.push_back(v);
  }
  const auto a = length_bias(verdicts, responses);
  c.expect(a.spearman.has_value(), "spearman computed");
  if (a.spearman) c.expect(std::abs(a.spearman->rho) < 0.2, "|rho| < 0.2, got " + std::to_string(a.spearman->rho));
}

void lexical_baselines(Check& c) {
  for (const std::string x : {"natural killer cell", "b cell", "CD14-positive monocyte in blood"}) {
    c.near(bleu(x, x, 1), 100.0, 1e-9, "bleu identity " + x);
    c.near(rouge(x, x, RougeMode::R1), 1.0, 1e-9, "rouge1 identity " + x);
    c.near(rouge(x, x, RougeMode::R2), 1.0, 1e-9, "rouge2 identity " + x);
    c.near(rouge(x, x, RougeMode::RL), 1.0, 1e-9, "rougeL identity " + x);
  }
  // Clipped unigram precision 2/3, no brevity penalty.
  c.near(bleu("natural killer cell", "killer cell", 1), 200.0 / 3.0, 1e-6, "bleu unigram fixture");
  // Bigram precision 1/3 with geometric mean over n = 1, 2.
  c.near(bleu("a b c d", "a b d c", 2), 100.0 * std::sqrt(1.0 / 3.0), 1e-6, "bleu bigram fixture");
  // LCS 3 over 5 and 3 tokens: P = 0.6, R = 1.
  c.near(rouge("the cell is a lymphocyte", "the cell lymphocyte", RougeMode::RL), 0.75, 1e-6, "rougeL fixture");
}

void garbage_handling(Check& c) {
  fixtures::TempDir work;
  const auto datasets = fixtures::demo_datasets(work.path());
  const auto instances = fixtures::all_instances(datasets);
  fixtures::MockEndpoints eps(instances, {.garbage_fraction = 0.1});
  RunContext ctx(fixtures::run_config(datasets, eps, work.path()));
  const auto report = fixtures::run_everything(ctx);

  std::map<Task, std::size_t> garbage;
  std::size_t total_garbage = 0;
  for (const auto& inst : instances) {
    if (eps.model.is_garbage(inst.id)) {
      ++garbage[inst.task];
      ++total_garbage;
    }
  }
  c.expect(total_garbage > 0, "some replies are garbage");
  for (const auto& [task, s] : report.tasks) {
    const auto name = std::string(to_string(task));
    c.expect(s.flagged == garbage[task], name + " flag count");
    c.expect(s.scored + s.flagged == s.instances, name + " scored + flagged == instances");
    c.expect(s.mean && *s.mean == 100.0, name + " mean excludes flagged");
  }
  c.expect(report.total.has_value(), "total computable");
  const auto json = to_json(report);
  c.expect(json.dump().find("\"flagged\"") != std::string::npos, "flag counts in report");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "worked example: NK label resolves, distance 2", 1, worked_example},
      {2, "rescale and reference totals", 1, rescale_and_totals},
      {3, "graph distances and depth vs brute force (100 DAGs)", 10, graph_oracles},
      {4, "spearman and kendall vs brute force (100 tied series)", 5, statistic_oracles},
      {5, "validate_cta with rubric judge over 50 fixtures", 30, validation_property},
      {6, "DEG sets match independent fold-change script", 60, deg_construction},
      {7, "byte-identical reruns and seed agreement", 120, determinism},
      {8, "length bias on independent scores", 5, length_bias_null},
      {9, "BLEU and ROUGE identities and fixtures", 1, lexical_baselines},
      {10, "10% garbage replies flagged and excluded", 120, garbage_handling},
  };
  spdlog::set_level(spdlog::level::warn);

  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.body(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > criterion.limit_seconds) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "took %.2f s, limit %.0f s", seconds, criterion.limit_seconds);
      check.expect(false, buf);
    }
    const bool ok = check.failures().empty();
    if (!ok) ++failed;
    std::printf("%s criterion %d: %s (%.3f s)\n", ok ? "PASS" : "FAIL", criterion.number, criterion.title.c_str(),
                seconds);
    for (const auto& f : check.failures()) std::printf("    %s\n", f.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

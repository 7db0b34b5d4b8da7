#include "cellbench/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "cellbench/error.hpp"
#include "cellbench/journal.hpp"
#include "cellbench/templates.hpp"
#include "cellbench/text.hpp"
#include "cellbench/validation.hpp"

namespace cellbench {

namespace fs = std::filesystem;
using nlohmann::json;

// Remote knowledge clients, present only when enabled in the config.
struct RunContext::Remote {
  std::unique_ptr<CachedFetcher> eutils;
  std::unique_ptr<CachedFetcher> uniprot_fetch;
  std::unique_ptr<CachedFetcher> quickgo;
  std::unique_ptr<CachedFetcher> ols_fetch;
  std::unique_ptr<NcbiGeneClient> ncbi;
  std::unique_ptr<UniProtClient> uniprot;
  std::unique_ptr<GoClient> go;
  std::unique_ptr<PubMedClient> pubmed;
  std::unique_ptr<OlsSearch> ols;
};

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first escaping exception stops
// the remaining work and is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto body = [&] {
    while (!stop.load()) {
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), std::max<std::size_t>(n, 1));
  std::vector<std::jthread> threads;
  for (std::size_t t = 0; t < count; ++t) threads.emplace_back(body);
  threads.clear();
  if (failure) std::rethrow_exception(failure);
}

bool is_fatal(const Error& e) {
  return e.kind() == ErrorKind::Credential || e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Io ||
         e.kind() == ErrorKind::Template;
}

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

template <typename Record>
void sort_by_id(std::vector<Record>& records) {
  std::sort(records.begin(), records.end(),
            [](const Record& a, const Record& b) { return a.instance_id < b.instance_id; });
}

}  // namespace

json to_json(const ResponseRecord& r) {
  json j = {{"instance_id", r.instance_id},
            {"task", to_string(r.task)},
            {"prompt_hash", r.prompt_hash},
            {"flagged", r.flagged()},
            {"flag_reason", r.flag_reason}};
  j["response"] = r.response ? to_json(*r.response) : json(nullptr);
  return j;
}

ResponseRecord response_record_from_json(const json& j) {
  try {
    ResponseRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    const auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw Error(ErrorKind::Schema, "unknown task in response record " + r.instance_id);
    r.task = *task;
    r.prompt_hash = j.value("prompt_hash", std::string());
    r.flag_reason = j.value("flag_reason", std::string());
    if (j.contains("response") && !j["response"].is_null()) r.response = response_from_json(j["response"]);
    if (!r.response && r.flag_reason.empty()) r.flag_reason = "missing response";
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed response record: ") + e.what());
  }
}

RunContext::RunContext(RunConfig config) : config_(std::move(config)) {
  config_.validate(true);
  {
    std::ifstream in(config_.ontology);
    if (!in) throw Error(ErrorKind::Io, "cannot open ontology " + config_.ontology.string());
    graph_ = parse_obo(in);
  }
  if (!config_.cell_markers.empty()) markers_ = CellMarkerTable::load(config_.cell_markers);
  sources_.markers = &markers_;
  if (!config_.gene_annotations.empty()) {
    annotations_ = std::make_unique<GeneAnnotationTable>(GeneAnnotationTable::load(config_.gene_annotations));
    sources_.gene_sources.push_back(annotations_.get());
  }
  sources_.perturbation_gene_cap = config_.knowledge.perturbation_gene_cap;
  sources_.caption_ancestor_depth = config_.knowledge.caption_ancestor_depth;

  cache_ = std::make_unique<ResponseCache>(config_.cache_dir);
  remote_ = std::make_unique<Remote>();
  const auto& k = config_.knowledge;
  const auto fetcher = [&](const std::string& name, const std::string& url) {
    FetcherOptions options;
    options.base_url = url;
    options.offline = k.offline;
    return std::make_unique<CachedFetcher>(name, options, cache_.get(),
                                           std::make_shared<RateLimiter>(k.rate_limit_per_second));
  };
  if (k.remote_gene_sources) {
    remote_->eutils = fetcher("ncbi-eutils", k.eutils_url);
    remote_->uniprot_fetch = fetcher("uniprot", k.uniprot_url);
    remote_->quickgo = fetcher("quickgo", k.quickgo_url);
    remote_->ncbi = std::make_unique<NcbiGeneClient>(*remote_->eutils);
    remote_->uniprot = std::make_unique<UniProtClient>(*remote_->uniprot_fetch);
    remote_->go = std::make_unique<GoClient>(*remote_->quickgo, *remote_->uniprot);
    remote_->pubmed = std::make_unique<PubMedClient>(*remote_->eutils);
    sources_.gene_sources.push_back(remote_->ncbi.get());
    sources_.gene_sources.push_back(remote_->uniprot.get());
    sources_.gene_sources.push_back(remote_->go.get());
    sources_.pubmed = remote_->pubmed.get();
  }
  if (k.remote_term_search) {
    remote_->ols_fetch = fetcher("ols", k.ols_url);
    remote_->ols = std::make_unique<OlsSearch>(*remote_->ols_fetch);
    sources_.term_search = remote_->ols.get();
  }
  log_ = std::make_unique<RunLog>(config_.output_dir / "runlog.jsonl");
}

RunContext::~RunContext() = default;

std::vector<TaskInstance> RunContext::load_instances(Task task) const {
  const auto it = config_.datasets.find(task);
  if (it == config_.datasets.end())
    throw Error(ErrorKind::Config, "no dataset configured for " + std::string(to_string(task)));
  auto instances = load_dataset(it->second);
  for (const auto& inst : instances) {
    if (inst.task != task)
      throw Error(ErrorKind::Schema, it->second.string() + ": instance " + inst.id + " is not a " +
                                         std::string(to_string(task)) + " instance");
  }
  std::sort(instances.begin(), instances.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return instances;
}

fs::path RunContext::responses_path(Task task) const {
  return config_.output_dir / "responses" / (std::string(to_string(task)) + ".jsonl");
}

fs::path RunContext::verdicts_path(Task task) const {
  return config_.output_dir / "verdicts" / (std::string(to_string(task)) + ".jsonl");
}

std::vector<ResponseRecord> generate_responses(RunContext& ctx, Task task) {
  const auto& cfg = ctx.config();
  const auto instances = ctx.load_instances(task);
  std::set<std::string> wanted;
  for (const auto& inst : instances) wanted.insert(inst.id);

  JsonlJournal journal(ctx.responses_path(task));
  std::map<std::string, ResponseRecord> done;
  for (const auto& j : journal.recover()) {
    auto record = response_record_from_json(j);
    if (wanted.contains(record.instance_id)) done[record.instance_id] = std::move(record);
  }
  std::vector<const TaskInstance*> pending;
  for (const auto& inst : instances) {
    if (!done.contains(inst.id)) pending.push_back(&inst);
  }
  spdlog::info("{}: {} responses journaled, {} to generate", to_string(task), done.size(), pending.size());

  std::mutex done_mutex;
  const auto finish = [&](const TaskInstance& inst, const std::string& prompt_hash,
                          const std::function<std::string()>& fetch_raw) {
    ResponseRecord record;
    record.instance_id = inst.id;
    record.task = task;
    record.prompt_hash = prompt_hash;
    try {
      record.response = standardize_response(task, fetch_raw(), cfg.cell_sentence_k);
    } catch (const Error& e) {
      if (is_fatal(e)) throw;
      spdlog::warn("{}: {}", inst.id, e.what());
      record.flag_reason = e.what();
    } catch (const std::exception& e) {
      record.flag_reason = std::string("unexpected error: ") + e.what();
    }
    journal.append(to_json(record));
    std::lock_guard lock(done_mutex);
    done[inst.id] = std::move(record);
  };

  if (!pending.empty() && !cfg.model.adapter_command.empty()) {
    std::vector<TaskInstance> batch;
    for (const auto* inst : pending) batch.push_back(*inst);
    const ExternalAdapter adapter(cfg.model.adapter_command);
    const auto replies = adapter.run(batch, cfg.output_dir / "adapter" / std::string(to_string(task)));
    for (const auto* inst : pending) {
      const auto prompt_hash = sha256_hex(render_answer_prompt(*inst, cfg.cell_sentence_k));
      finish(*inst, prompt_hash, [&] { return replies.at(inst->id); });
    }
  } else if (!pending.empty()) {
    ChatClient model(cfg.model.endpoint, &ctx.log());
    parallel_for(pending.size(), cfg.concurrency, [&](std::size_t i) {
      const auto& inst = *pending[i];
      ChatRequest request;
      request.model = cfg.model.endpoint.model;
      request.seed = cfg.seed;
      request.messages = {{"user", render_answer_prompt(inst, cfg.cell_sentence_k)}};
      finish(inst, sha256_hex(request.messages.front().content),
             [&] { return model.complete(request, inst.id); });
    });
  }
  journal.close();

  std::vector<ResponseRecord> records;
  for (auto& [_, r] : done) records.push_back(std::move(r));
  sort_by_id(records);
  std::vector<json> lines;
  for (const auto& r : records) lines.push_back(to_json(r));
  write_jsonl_atomic(ctx.responses_path(task), lines);
  return records;
}

std::vector<JudgeVerdict> judge_responses(RunContext& ctx, Task task, std::span<const ResponseRecord> responses) {
  const auto& cfg = ctx.config();
  const auto instances = ctx.load_instances(task);
  std::map<std::string, const ResponseRecord*> by_id;
  for (const auto& r : responses) by_id[r.instance_id] = &r;

  JsonlJournal journal(ctx.verdicts_path(task));
  std::map<std::string, JudgeVerdict> done;
  std::set<std::string> wanted;
  for (const auto& inst : instances) wanted.insert(inst.id);
  for (const auto& j : journal.recover()) {
    auto v = verdict_from_json(j);
    if (wanted.contains(v.instance_id)) done[v.instance_id] = std::move(v);
  }
  std::vector<const TaskInstance*> pending;
  for (const auto& inst : instances) {
    if (!done.contains(inst.id)) pending.push_back(&inst);
  }
  spdlog::info("{}: {} verdicts journaled, {} to judge", to_string(task), done.size(), pending.size());

  std::mutex done_mutex;
  std::unique_ptr<ChatClient> judge;
  if (!pending.empty()) judge = std::make_unique<ChatClient>(cfg.judge, &ctx.log());

  parallel_for(pending.size(), cfg.concurrency, [&](std::size_t i) {
    const auto& inst = *pending[i];
    const auto flag = [&](const std::string& reason) {
      return flagged_verdict(inst.id, task, reason, cfg.judge.model, cfg.seed);
    };
    JudgeVerdict verdict;
    const auto it = by_id.find(inst.id);
    if (it == by_id.end()) {
      verdict = flag("missing response");
    } else if (it->second->flagged()) {
      verdict = flag(it->second->flag_reason);
    } else {
      try {
        EvaluationInstance ev{inst.id, render_answer_prompt(inst, cfg.cell_sentence_k), *it->second->response,
                              retrieve_knowledge(inst, ctx.graph(), ctx.knowledge()), inst.ground_truth};
        verdict = judge_instance(*judge, ev, cfg.seed, cfg.judge_token_budget);
      } catch (const Error& e) {
        if (is_fatal(e)) throw;
        spdlog::warn("{}: {}", inst.id, e.what());
        verdict = flag(e.what());
      }
    }
    journal.append(to_json(verdict));
    std::lock_guard lock(done_mutex);
    done[inst.id] = std::move(verdict);
  });
  journal.close();

  std::vector<JudgeVerdict> verdicts;
  for (auto& [_, v] : done) verdicts.push_back(std::move(v));
  sort_by_id(verdicts);
  std::vector<json> lines;
  for (const auto& v : verdicts) lines.push_back(to_json(v));
  write_jsonl_atomic(ctx.verdicts_path(task), lines);

  const auto flagged = static_cast<std::size_t>(std::count_if(verdicts.begin(), verdicts.end(),
                                                              [](const JudgeVerdict& v) { return v.flagged; }));
  if (!verdicts.empty() &&
      static_cast<double>(flagged) > cfg.max_flagged_fraction * static_cast<double>(verdicts.size())) {
    throw Error(ErrorKind::RunFailure, std::string(to_string(task)) + ": " + std::to_string(flagged) + " of " +
                                           std::to_string(verdicts.size()) + " instances flagged");
  }
  return verdicts;
}

std::vector<JudgeVerdict> run_task(RunContext& ctx, Task task) {
  const auto responses = generate_responses(ctx, task);
  return judge_responses(ctx, task, responses);
}

std::vector<ResponseRecord> load_responses(const fs::path& path) {
  std::vector<ResponseRecord> records;
  for (const auto& j : read_jsonl(path)) records.push_back(response_record_from_json(j));
  sort_by_id(records);
  return records;
}

std::vector<JudgeVerdict> load_verdicts(const fs::path& path) {
  std::vector<JudgeVerdict> verdicts;
  for (const auto& j : read_jsonl(path)) verdicts.push_back(verdict_from_json(j));
  sort_by_id(verdicts);
  return verdicts;
}

BenchmarkReport build_report(const RunContext& ctx, const std::map<Task, std::vector<JudgeVerdict>>& verdicts,
                             const std::map<Task, std::vector<ResponseRecord>>& responses) {
  const auto& cfg = ctx.config();
  BenchmarkReport report;
  report.model = cfg.model.label.empty() ? cfg.model.endpoint.model : cfg.model.label;

  auto& prov = report.provenance;
  prov.config_hash = cfg.hash();
  prov.template_version = std::string(template_version());
  prov.model = cfg.model.endpoint.model;
  prov.judge_model = cfg.judge.model;
  prov.seed = cfg.seed;

  for (const auto& [task, list] : verdicts) {
    report.tasks[task] = summarize_task(task, list);
    for (const auto& v : list) {
      prov.cache_hits += v.cache_hits;
      prov.cache_lookups += v.cache_lookups;
    }
    const auto path = ctx.verdicts_path(task);
    if (fs::exists(path)) prov.journal_sha256["verdicts/" + path.filename().string()] = file_sha256(path);
  }
  compute_total(report);

  for (const auto& [task, list] : verdicts) {
    const auto rit = responses.find(task);
    if (rit == responses.end()) continue;
    ResponseMap response_map;
    for (const auto& r : rit->second) {
      if (r.response) response_map[r.instance_id] = *r.response;
    }
    const auto path = ctx.responses_path(task);
    if (fs::exists(path)) prov.journal_sha256["responses/" + path.filename().string()] = file_sha256(path);

    const auto instances = ctx.load_instances(task);
    switch (task) {
      case Task::CTA: {
        report.analyses.push_back(validate_cta(list, response_map, instances, ctx.graph(), ctx.term_search()));
        std::vector<std::string> labels;
        for (const auto& r : rit->second) {
          if (const auto* p = r.response ? std::get_if<CellTypePrediction>(&r.response->payload) : nullptr) {
            labels.push_back(p->label);
          } else {
            labels.emplace_back();
          }
        }
        report.depth_histogram = depth_histogram(labels, ctx.graph(), cfg.histogram_bin_width, ctx.term_search());
        break;
      }
      case Task::CG:
        report.analyses.push_back(
            validate_cg(list, response_map, instances, ctx.graph(), ctx.markers(), ctx.term_search()));
        break;
      case Task::PP:
        report.analyses.push_back(validate_pp(list, response_map, instances));
        break;
      default:
        break;
    }
    auto bias = length_bias(list, response_map);
    bias.name = "length_bias_" + text::to_lower(to_string(task));
    report.analyses.push_back(std::move(bias));
  }
  return report;
}

std::vector<TaskInstance> build_cta_instances(std::span<const CellSentence> sentences) {
  std::vector<TaskInstance> out;
  for (const auto& s : sentences) {
    const auto type = s.metadata.find("cell_type");
    if (type == s.metadata.end() || text::trim(type->second).empty())
      throw Error(ErrorKind::Schema, "cell " + s.cell_id + " has no cell_type label");
    const auto curie = s.metadata.find("cell_ontology_id");
    TaskInstance inst;
    inst.task = Task::CTA;
    inst.id = "cta-" + s.cell_id;
    CellSentence input = s;
    input.metadata.erase("cell_type");
    input.metadata.erase("cell_ontology_id");
    inst.input = std::move(input);
    inst.ground_truth = OntologyLabel{type->second, curie == s.metadata.end() ? std::string() : curie->second};
    inst.knowledge_refs = {"CL"};
    inst.validate();
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TaskInstance> build_cg_instances(std::span<const CellSentence> type_sentences) {
  std::vector<TaskInstance> out;
  for (const auto& s : type_sentences) {
    const auto type = s.metadata.find("cell_type");
    if (type == s.metadata.end() || text::trim(type->second).empty())
      throw Error(ErrorKind::Schema, "sentence " + s.cell_id + " has no cell_type label");
    const auto curie = s.metadata.find("cell_ontology_id");
    std::string slug;
    for (char c : normalize_label(type->second)) slug.push_back(c == ' ' ? '_' : c);
    TaskInstance inst;
    inst.task = Task::CG;
    inst.id = "cg-" + slug;
    inst.input = CellTypeQuery{type->second};
    inst.ground_truth = GeneratedCellTruth{s, curie == s.metadata.end() ? std::string() : curie->second};
    inst.knowledge_refs = {"CellMarker"};
    inst.validate();
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TaskInstance> build_pp_instances(std::span<const PerturbationCase> cases) {
  std::vector<TaskInstance> out;
  for (const auto& c : cases) {
    TaskInstance inst;
    inst.task = Task::PP;
    inst.id = "pp-" + c.perturbation_id;
    inst.input = PerturbationInput{c.control_sentence, c.perturbation_id, c.targets};
    inst.ground_truth = c;
    inst.knowledge_refs = {"NCBI", "UniProt", "GO"};
    inst.validate();
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace cellbench

#include "cellbench/config.hpp"

#include <fstream>
#include <set>

#include "cellbench/cache.hpp"
#include "cellbench/error.hpp"
#include "cellbench/templates.hpp"

namespace cellbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kTopKeys = {
    "datasets",      "ontology",         "cell_markers", "gene_annotations",      "model",
    "judge",         "seed",             "concurrency",  "cache_dir",             "cell_sentence_k",
    "deg_threshold", "deg_max_per_direction", "output_dir", "template_version", "judge_token_budget",
    "histogram_bin_width", "max_flagged_fraction", "knowledge"};

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

EndpointSpec endpoint_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Config, where + " must be an object");
  for (const char* secret : {"api_key", "key", "token", "password"}) {
    if (j.contains(secret))
      throw Error(ErrorKind::Config, where + "." + secret + ": credentials belong in environment variables");
  }
  reject_unknown(j, {"url", "model", "api_key_env", "timeout_seconds", "retries", "label", "adapter"}, where);
  EndpointSpec e;
  e.url = j.value("url", std::string());
  e.model = j.value("model", std::string());
  e.api_key_env = j.value("api_key_env", std::string());
  e.timeout = std::chrono::milliseconds(static_cast<long>(j.value("timeout_seconds", 120.0) * 1000));
  e.retry.attempts = j.value("retries", 3);
  return e;
}

json endpoint_to_json(const EndpointSpec& e) {
  return {{"url", e.url},
          {"model", e.model},
          {"api_key_env", e.api_key_env},
          {"timeout_seconds", static_cast<double>(e.timeout.count()) / 1000.0},
          {"retries", e.retry.attempts}};
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Config, std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
  reject_unknown(j, kTopKeys, "config");
  RunConfig c;
  c.base_dir = base_dir;

  if (j.contains("datasets")) {
    for (const auto& [name, value] : j["datasets"].items()) {
      const auto task = parse_task(name);
      if (!task) throw Error(ErrorKind::Config, "unknown task '" + name + "' in datasets");
      c.datasets[*task] = resolve(base_dir, value.get<std::string>());
    }
  }
  c.ontology = resolve(base_dir, get_or<std::string>(j, "ontology", ""));
  c.cell_markers = resolve(base_dir, get_or<std::string>(j, "cell_markers", ""));
  c.gene_annotations = resolve(base_dir, get_or<std::string>(j, "gene_annotations", ""));
  if (j.contains("model")) {
    c.model.endpoint = endpoint_from_json(j["model"], "model");
    c.model.label = j["model"].value("label", c.model.endpoint.model);
    c.model.adapter_command = j["model"].value("adapter", std::string());
  }
  if (j.contains("judge")) c.judge = endpoint_from_json(j["judge"], "judge");
  c.seed = get_or<std::int64_t>(j, "seed", c.seed);
  c.concurrency = get_or<int>(j, "concurrency", c.concurrency);
  c.cache_dir = resolve(base_dir, get_or<std::string>(j, "cache_dir", "cache"));
  c.cell_sentence_k = get_or<std::size_t>(j, "cell_sentence_k", c.cell_sentence_k);
  c.deg_threshold = get_or<double>(j, "deg_threshold", c.deg_threshold);
  c.deg_max_per_direction = get_or<std::size_t>(j, "deg_max_per_direction", c.deg_max_per_direction);
  c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "out"));
  c.template_version = get_or<std::string>(j, "template_version", c.template_version);
  c.judge_token_budget = get_or<std::size_t>(j, "judge_token_budget", c.judge_token_budget);
  c.histogram_bin_width = get_or<int>(j, "histogram_bin_width", c.histogram_bin_width);
  c.max_flagged_fraction = get_or<double>(j, "max_flagged_fraction", c.max_flagged_fraction);

  if (j.contains("knowledge")) {
    const auto& k = j["knowledge"];
    reject_unknown(k, {"offline", "remote_gene_sources", "remote_term_search", "rate_limit_per_second", "eutils_url",
                       "uniprot_url", "quickgo_url", "ols_url", "perturbation_gene_cap", "caption_ancestor_depth"},
                   "knowledge");
    auto& kc = c.knowledge;
    kc.offline = get_or<bool>(k, "offline", kc.offline);
    kc.remote_gene_sources = get_or<bool>(k, "remote_gene_sources", kc.remote_gene_sources);
    kc.remote_term_search = get_or<bool>(k, "remote_term_search", kc.remote_term_search);
    kc.rate_limit_per_second = get_or<double>(k, "rate_limit_per_second", kc.rate_limit_per_second);
    kc.eutils_url = get_or<std::string>(k, "eutils_url", kc.eutils_url);
    kc.uniprot_url = get_or<std::string>(k, "uniprot_url", kc.uniprot_url);
    kc.quickgo_url = get_or<std::string>(k, "quickgo_url", kc.quickgo_url);
    kc.ols_url = get_or<std::string>(k, "ols_url", kc.ols_url);
    kc.perturbation_gene_cap = get_or<std::size_t>(k, "perturbation_gene_cap", kc.perturbation_gene_cap);
    kc.caption_ancestor_depth = get_or<int>(k, "caption_ancestor_depth", kc.caption_ancestor_depth);
  }
  c.validate(false);
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::Config, path.string() + " is not valid JSON");
  return config_from_json(j, fs::absolute(path).parent_path());
}

json RunConfig::to_json() const {
  json ds = json::object();
  for (const auto& [task, path] : datasets) ds[std::string(cellbench::to_string(task))] = path.string();
  auto model_json = endpoint_to_json(model.endpoint);
  model_json["label"] = model.label;
  model_json["adapter"] = model.adapter_command;
  return {{"datasets", ds},
          {"ontology", ontology.string()},
          {"cell_markers", cell_markers.string()},
          {"gene_annotations", gene_annotations.string()},
          {"model", model_json},
          {"judge", endpoint_to_json(judge)},
          {"seed", seed},
          {"concurrency", concurrency},
          {"cache_dir", cache_dir.string()},
          {"cell_sentence_k", cell_sentence_k},
          {"deg_threshold", deg_threshold},
          {"deg_max_per_direction", deg_max_per_direction},
          {"output_dir", output_dir.string()},
          {"template_version", template_version},
          {"judge_token_budget", judge_token_budget},
          {"histogram_bin_width", histogram_bin_width},
          {"max_flagged_fraction", max_flagged_fraction},
          {"knowledge",
           {{"offline", knowledge.offline},
            {"remote_gene_sources", knowledge.remote_gene_sources},
            {"remote_term_search", knowledge.remote_term_search},
            {"rate_limit_per_second", knowledge.rate_limit_per_second},
            {"eutils_url", knowledge.eutils_url},
            {"uniprot_url", knowledge.uniprot_url},
            {"quickgo_url", knowledge.quickgo_url},
            {"ols_url", knowledge.ols_url},
            {"perturbation_gene_cap", knowledge.perturbation_gene_cap},
            {"caption_ancestor_depth", knowledge.caption_ancestor_depth}}}};
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

void RunConfig::validate(bool check_paths) const {
  const auto fail = [](const std::string& m) { throw Error(ErrorKind::Config, m); };
  if (concurrency < 1) fail("concurrency must be positive");
  if (cell_sentence_k < 1) fail("cell_sentence_k must be positive");
  if (deg_threshold <= 0.0) fail("deg_threshold must be positive");
  if (histogram_bin_width < 1) fail("histogram_bin_width must be positive");
  if (judge_token_budget < 1) fail("judge_token_budget must be positive");
  if (max_flagged_fraction < 0.0 || max_flagged_fraction > 1.0) fail("max_flagged_fraction must be in [0,1]");
  if (knowledge.rate_limit_per_second <= 0.0) fail("knowledge.rate_limit_per_second must be positive");
  if (knowledge.caption_ancestor_depth < 0) fail("knowledge.caption_ancestor_depth must be >= 0");
  if (template_version != std::string(cellbench::template_version())) fail("template_version '" + template_version + "' is not built in");
  if (!check_paths) return;
  const auto need = [&](const fs::path& p, const std::string& what) {
    if (p.empty()) fail(what + " is not configured");
    if (!fs::exists(p)) fail(what + " not found: " + p.string());
  };
  need(ontology, "ontology");
  for (const auto& [task, path] : datasets) need(path, std::string(cellbench::to_string(task)) + " dataset");
  if (!cell_markers.empty()) need(cell_markers, "cell_markers");
  if (!gene_annotations.empty()) need(gene_annotations, "gene_annotations");
}

}  // namespace cellbench

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cellbench/adapter.hpp"
#include "cellbench/task.hpp"

namespace cellbench {

inline constexpr std::int64_t kDefaultSeed = 20250701;
inline constexpr int kDefaultConcurrency = 8;
inline constexpr int kDefaultHistogramBinWidth = 2;

struct KnowledgeConfig {
  bool offline = true;
  bool remote_gene_sources = false;
  bool remote_term_search = false;
  double rate_limit_per_second = 3.0;
  std::string eutils_url = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
  std::string uniprot_url = "https://rest.uniprot.org";
  std::string quickgo_url = "https://www.ebi.ac.uk";
  std::string ols_url = "https://www.ebi.ac.uk/ols4";
  std::size_t perturbation_gene_cap = 25;
  int caption_ancestor_depth = 3;
};

struct ModelConfig {
  std::string label;  // display name in reports; defaults to endpoint.model
  EndpointSpec endpoint;
  std::string adapter_command;  // external program instead of the chat endpoint
};

/// One JSON document. Relative paths resolve against the config file's directory.
/// Secrets never live here: endpoints name the environment variable holding the key.
struct RunConfig {
  std::filesystem::path base_dir;
  std::map<Task, std::filesystem::path> datasets;
  std::filesystem::path ontology;
  std::filesystem::path cell_markers;
  std::filesystem::path gene_annotations;
  ModelConfig model;
  EndpointSpec judge;
  std::int64_t seed = kDefaultSeed;
  int concurrency = kDefaultConcurrency;
  std::filesystem::path cache_dir;
  std::size_t cell_sentence_k = 100;
  double deg_threshold = 1.0;
  std::size_t deg_max_per_direction = 20;
  std::filesystem::path output_dir;
  std::string template_version = "v1";
  std::size_t judge_token_budget = 6000;
  int histogram_bin_width = kDefaultHistogramBinWidth;
  double max_flagged_fraction = 0.5;
  KnowledgeConfig knowledge;

  /// Canonical form (sorted keys, resolved paths).
  nlohmann::json to_json() const;
  /// SHA-256 of the canonical form.
  std::string hash() const;
  /// Throws Config on bad values, and on missing files when `check_paths` is set.
  void validate(bool check_paths = true) const;
};

RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
/// Throws Io when unreadable, Config when malformed.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace cellbench

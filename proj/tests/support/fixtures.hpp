#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "cellbench/config.hpp"
#include "cellbench/ontology.hpp"
#include "cellbench/task.hpp"

namespace fixtures {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(CELLBENCH_TEST_DATA_DIR); }

inline const cellbench::OntologyGraph& bundled_graph() {
  static const cellbench::OntologyGraph graph = [] {
    std::ifstream in(data_dir() / "ontology" / "cl_subset.obo");
    return cellbench::parse_obo(in);
  }();
  return graph;
}

inline cellbench::OntologyGraph graph_from(const std::string& obo) {
  std::istringstream in(obo);
  return cellbench::parse_obo(in);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("cellbench-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Config document wired to the bundled ontology, markers and annotations.
inline nlohmann::json config_json(const std::map<cellbench::Task, fs::path>& datasets, const std::string& model_url,
                                  const std::string& judge_url, const fs::path& work) {
  nlohmann::json ds = nlohmann::json::object();
  for (const auto& [task, path] : datasets) ds[std::string(cellbench::to_string(task))] = path.string();
  return {{"datasets", ds},
          {"ontology", (data_dir() / "ontology" / "cl_subset.obo").string()},
          {"cell_markers", (data_dir() / "markers" / "cellmarker_subset.tsv").string()},
          {"gene_annotations", (data_dir() / "genes" / "gene_annotations.tsv").string()},
          {"model", {{"url", model_url}, {"model", "mock-model"}, {"retries", 2}, {"timeout_seconds", 30}}},
          {"judge", {{"url", judge_url}, {"model", "mock-judge"}, {"retries", 2}, {"timeout_seconds", 30}}},
          {"concurrency", 4},
          {"cache_dir", (work / "cache").string()},
          {"output_dir", (work / "out").string()}};
}

inline cellbench::RunConfig make_config(const nlohmann::json& doc, const fs::path& base) {
  return cellbench::config_from_json(doc, base);
}

}  // namespace fixtures

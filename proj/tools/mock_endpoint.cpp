// cellbench-mock: deterministic local chat endpoints for dry runs.
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cellbench/dataset.hpp"
#include "cellbench/error.hpp"
#include "cellbench/ontology.hpp"
#include "mock/mock_server.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
extern "C" void on_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
  using namespace cellbench;
  CLI::App app{"cellbench-mock: local model and judge doubles speaking the chat completions protocol"};
  std::string role = "model";
  int port = 0;
  std::vector<std::string> datasets;
  std::string ontology;
  std::optional<int> fixed;
  int noise = 0;
  mock::ModelBehaviour behaviour;
  std::string key_env;
  app.add_option("--role", role, "model or judge")->check(CLI::IsMember({"model", "judge"}));
  app.add_option("--port", port, "Port on 127.0.0.1 (0 picks a free one)");
  app.add_option("--dataset", datasets, "Task dataset(s) the model double answers from")->check(CLI::ExistingFile);
  app.add_option("--ontology", ontology, "OBO file for distance-based CTA answers and ratings")->check(CLI::ExistingFile);
  app.add_option("--garbage", behaviour.garbage_fraction, "Share of unparsable model replies")->check(CLI::Range(0.0, 1.0));
  app.add_flag("--drift", behaviour.drift, "Degrade model answers by a per-instance level");
  app.add_option("--fixed-rating", fixed, "Judge always replies with this rating")->check(CLI::Range(0, 5));
  app.add_option("--noise", noise, "Judge rating jitter")->check(CLI::Range(0, 5));
  app.add_option("--require-key-env", key_env, "Require the bearer key held in this environment variable");
  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<OntologyGraph> graph;
    if (!ontology.empty()) {
      std::ifstream in(ontology);
      graph = parse_obo(in);
    }
    std::string key;
    if (!key_env.empty()) {
      const char* v = std::getenv(key_env.c_str());
      if (v == nullptr) throw Error(ErrorKind::Credential, key_env + " is not set");
      key = v;
    }
    const OntologyGraph* g = graph ? &*graph : nullptr;
    mock::ChatHandler handler;
    if (role == "model") {
      std::vector<TaskInstance> instances;
      for (const auto& path : datasets) {
        for (auto& inst : load_dataset(path)) instances.push_back(std::move(inst));
      }
      handler = mock::OracleModel(std::move(instances), g, behaviour);
    } else if (fixed) {
      handler = mock::fixed_judge(*fixed);
    } else {
      handler = mock::RubricJudge(g, noise);
    }
    mock::ChatServer server(std::move(handler), key, port);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << server.url() << std::endl;
    while (g_stop == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <benchmark/benchmark.h>

#include "cellbench/ontology.hpp"
#include "support/oracles.hpp"

namespace {

const cellbench::OntologyGraph& bundled() {
  static const auto graph = [] {
    std::ifstream in(std::string(CELLBENCH_TEST_DATA_DIR) + "/ontology/cl_subset.obo");
    return cellbench::parse_obo(in);
  }();
  return graph;
}

void BM_ParseObo(benchmark::State& state) {
  std::ifstream in(std::string(CELLBENCH_TEST_DATA_DIR) + "/ontology/cl_subset.obo");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (auto _ : state) {
    std::istringstream s(text);
    benchmark::DoNotOptimize(cellbench::parse_obo(s));
  }
}
BENCHMARK(BM_ParseObo);

void BM_ResolveTerm(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cellbench::resolve_term(bundled(), "Natural Killer (NK) Cell"));
}
BENCHMARK(BM_ResolveTerm);

void BM_DistanceBundled(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(cellbench::shortest_path_distance(bundled(), "CL:0000623", "CL:2000001"));
}
BENCHMARK(BM_DistanceBundled);

void BM_DistanceRandomDag(benchmark::State& state) {
  std::mt19937_64 rng(11);
  const auto dag = oracle::random_dag(rng, static_cast<int>(state.range(0)));
  const auto g = cellbench::OntologyGraph::from_terms(dag.terms);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& a = dag.ids[i % dag.ids.size()];
    const auto& b = dag.ids[(i * 7 + 3) % dag.ids.size()];
    benchmark::DoNotOptimize(g.distance(a, b));
    ++i;
  }
}
BENCHMARK(BM_DistanceRandomDag)->Arg(50)->Arg(500)->Arg(5000);

void BM_DepthToRoot(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cellbench::depth_to_root(bundled(), "CL:2000001"));
}
BENCHMARK(BM_DepthToRoot);

}  // namespace

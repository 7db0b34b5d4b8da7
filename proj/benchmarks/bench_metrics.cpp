#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "cellbench/metrics.hpp"

namespace {

std::vector<double> series(std::size_t n, std::uint64_t seed, int levels) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng() % levels);
  return v;
}

std::string sentence(std::size_t words, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::string s;
  for (std::size_t i = 0; i < words; ++i) s += "g" + std::to_string(rng() % 200) + " ";
  return s;
}

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = series(n, 1, 50), y = series(n, 2, 50);
  for (auto _ : state) benchmark::DoNotOptimize(cellbench::spearman(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Spearman)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_KendallTau(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = series(n, 3, 50), y = series(n, 4, 50);
  for (auto _ : state) benchmark::DoNotOptimize(cellbench::kendall_tau(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTau)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_Bleu4(benchmark::State& state) {
  const auto a = sentence(static_cast<std::size_t>(state.range(0)), 5);
  const auto b = sentence(static_cast<std::size_t>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(cellbench::bleu(a, b, 4));
}
BENCHMARK(BM_Bleu4)->Arg(100)->Arg(1000);

void BM_RougeL(benchmark::State& state) {
  const auto a = sentence(static_cast<std::size_t>(state.range(0)), 7);
  const auto b = sentence(static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(cellbench::rouge(a, b, cellbench::RougeMode::RL));
}
BENCHMARK(BM_RougeL)->Arg(100)->Arg(1000);

}  // namespace

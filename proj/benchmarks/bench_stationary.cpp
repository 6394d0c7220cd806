#include <benchmark/benchmark.h>

#include "pcmc/choice.hpp"
#include "pcmc/datagen.hpp"

namespace {

void BM_SolveStationary(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const pcmc::RateMatrix q = pcmc::datagen::random_pcmc(n, 7);
  for (auto _ : state) {
    pcmc::ChoiceDistribution pi = pcmc::solve_stationary(q);
    benchmark::DoNotOptimize(pi.probs.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveStationary)->RangeMultiplier(2)->Range(4, 64)->Complexity();

void BM_RestrictAndSolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const pcmc::RateMatrix q = pcmc::datagen::random_pcmc(64, 11);
  std::vector<std::size_t> subset(n);
  for (std::size_t i = 0; i < n; ++i) subset[i] = i * 64 / n;
  for (auto _ : state) {
    pcmc::ChoiceDistribution pi = pcmc::solve_stationary(pcmc::restrict_to(q, subset));
    benchmark::DoNotOptimize(pi.probs.data());
  }
}
BENCHMARK(BM_RestrictAndSolve)->RangeMultiplier(2)->Range(4, 32);

}  // namespace

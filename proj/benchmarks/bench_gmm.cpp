#include <benchmark/benchmark.h>

#include "spkid/gmm.hpp"
#include "spkid/rng.hpp"

using namespace spkid;

namespace {

Matrix frames(std::size_t n, std::size_t d) {
  Rng rng(2);
  Matrix x(n, d);
  for (double& v : x.data()) v = rng.normal();
  return x;
}

// Cost of a single EM iteration (init included) for M components.
void BM_EmIteration(benchmark::State& state) {
  const auto x = frames(5000, 13);
  EmConfig cfg;
  cfg.components = static_cast<int>(state.range(0));
  cfg.max_iterations = 1;
  for (auto _ : state) benchmark::DoNotOptimize(em_fit(x, cfg));
}
BENCHMARK(BM_EmIteration)->Arg(8)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_MapAdapt(benchmark::State& state) {
  const auto x = frames(2000, 13);
  EmConfig cfg;
  cfg.components = 128;
  cfg.max_iterations = 2;
  const auto ubm = em_fit(x, cfg);
  const auto utt = frames(600, 13);
  for (auto _ : state) benchmark::DoNotOptimize(map_adapt_means(ubm, utt, MapConfig{}));
}
BENCHMARK(BM_MapAdapt)->Unit(benchmark::kMillisecond);

}  // namespace

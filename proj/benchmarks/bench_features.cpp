#include <benchmark/benchmark.h>

#include "spkid/audio_frontend.hpp"
#include "spkid/features.hpp"
#include "spkid/rng.hpp"

using namespace spkid;

namespace {

// One second of noise at 16 kHz, framed the default way.
FrameMatrix one_second() {
  Rng rng(1);
  SampleBuffer buf{std::vector<double>(16000), 16000};
  for (auto& s : buf.samples) s = 0.1 * rng.normal();
  return analysis_frames(buf, FramingConfig{});
}

void BM_Mfcc(benchmark::State& state) {
  const auto frames = one_second();
  const FrontendConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(mfcc(frames, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(frames.frame_count()));
}
BENCHMARK(BM_Mfcc);

void BM_RastaPlp(benchmark::State& state) {
  const auto frames = one_second();
  const FrontendConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(rasta_plp(frames, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(frames.frame_count()));
}
BENCHMARK(BM_RastaPlp);

void BM_F4(benchmark::State& state) {
  const auto frames = one_second();
  const FrontendConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(assemble_feature_set(FeatureSet::kF4, frames, cfg));
}
BENCHMARK(BM_F4);

}  // namespace

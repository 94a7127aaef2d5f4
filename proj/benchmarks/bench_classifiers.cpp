#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "spkid/classifiers.hpp"
#include "spkid/rng.hpp"

using namespace spkid;

namespace {

// Supervector-sized training set: 10 speakers x 8 utterances.
void make_set(std::size_t dim, Matrix* x, std::vector<std::string>* labels) {
  Rng rng(3);
  *x = Matrix(80, dim);
  labels->clear();
  for (std::size_t i = 0; i < 80; ++i) {
    labels->push_back("spk" + std::to_string(i / 8));
    for (std::size_t j = 0; j < dim; ++j)
      (*x)(i, j) = rng.normal(static_cast<double>((i / 8 * 7 + j) % 5), 1.0);
  }
}

void BM_OvoTrain(benchmark::State& state) {
  Matrix x;
  std::vector<std::string> labels;
  make_set(static_cast<std::size_t>(state.range(0)), &x, &labels);
  for (auto _ : state) benchmark::DoNotOptimize(ovo_train(x, labels, SvmConfig{}));
}
BENCHMARK(BM_OvoTrain)->Arg(1536)->Arg(3200)->Unit(benchmark::kMillisecond);

void BM_NbTrain(benchmark::State& state) {
  Matrix x;
  std::vector<std::string> labels;
  make_set(3200, &x, &labels);
  for (auto _ : state) benchmark::DoNotOptimize(nb_train(x, labels, NbConfig{}));
}
BENCHMARK(BM_NbTrain);

}  // namespace

// Serial reference kernels against their OpenMP counterparts. With one core
// the pairs should match; with more they show the parallel speed-up.

#include <benchmark/benchmark.h>

#include "crossrsa/neuro.hpp"
#include "crossrsa/network.hpp"
#include "crossrsa/rdm.hpp"
#include "crossrsa/resample.hpp"
#include "crossrsa/rng.hpp"

using namespace crossrsa;

namespace {

FeatureMatrix random_features(std::size_t m, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix fm;
  fm.features = Matrix(m, k);
  for (auto& v : fm.features.data()) v = rng.normal();
  for (std::size_t i = 0; i < m; ++i) fm.stimulus_ids.push_back("s" + std::to_string(i));
  return fm;
}

NeuralDataset random_neural(std::size_t m, std::size_t n) {
  auto d = NeuralDataset::empty(Species::synthetic, "IT", random_features(m, 2, 0).stimulus_ids,
                                random_features(n, 2, 0).stimulus_ids, 1);
  Rng rng(3);
  for (auto& v : d.responses) v = rng.normal();
  return d;
}

void BM_Rdm(benchmark::State& state) {
  const auto fm = random_features(static_cast<std::size_t>(state.range(0)), 4096, 1);
  for (auto _ : state) benchmark::DoNotOptimize(compute_rdm(fm));
}
void BM_RdmReference(benchmark::State& state) {
  const auto fm = random_features(static_cast<std::size_t>(state.range(0)), 4096, 1);
  for (auto _ : state) benchmark::DoNotOptimize(reference::compute_rdm(fm));
}

void BM_Bootstrap(benchmark::State& state) {
  const auto a = compute_rdm(random_features(60, 100, 1));
  const auto b = compute_rdm(random_features(60, 100, 2));
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_rsa(a, b, {1000, 0, 0.05}));
}
void BM_BootstrapReference(benchmark::State& state) {
  const auto a = compute_rdm(random_features(60, 100, 1));
  const auto b = compute_rdm(random_features(60, 100, 2));
  for (auto _ : state) benchmark::DoNotOptimize(reference::bootstrap_rsa(a, b, {1000, 0, 0.05}));
}

void BM_SplitHalf(benchmark::State& state) {
  const auto d = random_neural(80, 200);
  for (auto _ : state) benchmark::DoNotOptimize(split_half_ceiling(d, {100, 0, DistanceMetric::correlation}));
}
void BM_SplitHalfReference(benchmark::State& state) {
  const auto d = random_neural(80, 200);
  for (auto _ : state) benchmark::DoNotOptimize(reference::split_half_ceiling(d, {100, 0, DistanceMetric::correlation}));
}

struct ConvInput {
  Tensor in, w, b;
};
ConvInput conv_input() {
  Rng rng(4);
  ConvInput c{Tensor::zeros({16, 32, 32, 32}), Tensor::zeros({64, 32, 3, 3}), Tensor::zeros({64})};
  for (auto* t : {&c.in, &c.w, &c.b})
    for (auto& v : t->data) v = rng.normal();
  return c;
}
void BM_Conv2d(benchmark::State& state) {
  const auto c = conv_input();
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(c.in, c.w, c.b));
}
void BM_Conv2dReference(benchmark::State& state) {
  const auto c = conv_input();
  for (auto _ : state) benchmark::DoNotOptimize(reference::conv2d(c.in, c.w, c.b));
}

}  // namespace

BENCHMARK(BM_Rdm)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RdmReference)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SplitHalf)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SplitHalfReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2d)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dReference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

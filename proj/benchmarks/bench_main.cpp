#include <benchmark/benchmark.h>

#include "polarfilm/autodiff.hpp"
#include "polarfilm/dataset.hpp"
#include "polarfilm/metrics.hpp"
#include "polarfilm/mosaic.hpp"
#include "polarfilm/network.hpp"
#include "polarfilm/plm.hpp"
#include "polarfilm/polar.hpp"
#include "polarfilm/rng.hpp"
#include "polarfilm/train.hpp"

using namespace polarfilm;

namespace {

SampleData sample(int size) {
  SceneConfig c;
  c.width = c.height = size;
  c.seed = 7;
  return make_sample(c);
}

Tensor<float> random_tensor(Tensor<float>::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t(shape);
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

void BM_Stokes(benchmark::State& state) {
  const SampleData s = sample(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(stokes_from_stack(s.stack));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Stokes)->Arg(64)->Arg(256);

void BM_AnalyticPrior(benchmark::State& state) {
  const StokesMap st = stokes_from_stack(sample(static_cast<int>(state.range(0))).stack);
  for (auto _ : state) benchmark::DoNotOptimize(analytic_prior(st));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_AnalyticPrior)->Arg(256);

void BM_Demosaic(benchmark::State& state) {
  const SampleData s = sample(256);
  const auto method = static_cast<DemosaicMethod>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(demosaic(s.raw, method));
}
BENCHMARK(BM_Demosaic)
    ->Arg(static_cast<int>(DemosaicMethod::Subsample))
    ->Arg(static_cast<int>(DemosaicMethod::Bilinear))
    ->Arg(static_cast<int>(DemosaicMethod::EdgeAware));

void BM_Ssim(benchmark::State& state) {
  const SampleData s = sample(128);
  const Field m = mean_intensity(s.stack);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(s.gt, m));
}
BENCHMARK(BM_Ssim);

void BM_Conv3x3Forward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = random_tensor({2, c, 32, 32}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c, 1, 1, 1}, 3);
  for (auto _ : state) {
    Tape<float> tape(false);
    benchmark::DoNotOptimize(ad::conv2d(tape.constant(x), tape.constant(w), tape.constant(b)).value().data());
  }
}
BENCHMARK(BM_Conv3x3Forward)->Arg(16)->Arg(48);

void BM_Conv3x3ForwardBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = random_tensor({2, c, 32, 32}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c, 1, 1, 1}, 3);
  for (auto _ : state) {
    Tape<float> tape;
    const auto y = ad::conv2d(tape.variable(x), tape.variable(w), tape.variable(b));
    tape.backward(ad::mean(y));
  }
}
BENCHMARK(BM_Conv3x3ForwardBackward)->Arg(16)->Arg(48);

void BM_AnetForward64(benchmark::State& state) {
  auto net = build_anet<float>(RdnDescriptor{});
  net.init_kaiming(1);
  const auto x = random_tensor({1, 6, 64, 64}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x).data());
}
BENCHMARK(BM_AnetForward64)->Unit(benchmark::kMillisecond);

void BM_TrainIteration(benchmark::State& state) {
  std::vector<TrainSample> samples;
  for (std::uint64_t i = 0; i < 4; ++i) {
    SceneConfig c;
    c.seed = i;
    SampleData s = make_sample(c);
    samples.push_back({std::move(s.stack), std::move(s.gt)});
  }
  TrainConfig cfg;
  cfg.max_iterations = 10;
  for (auto _ : state) benchmark::DoNotOptimize(train(cfg, PipelineSpec{}, samples).losses.back());
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include "mcinr/acquisition.hpp"
#include "mcinr/fourier.hpp"
#include "mcinr/geometry.hpp"
#include "mcinr/metrics.hpp"
#include "mcinr/model.hpp"
#include "mcinr/optimizer.hpp"
#include "mcinr/phantom.hpp"
#include "mcinr/spline.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace mcinr;

ModelShape bench_shape(int width) {
  ModelShape s;
  s.input_dim = 128;
  s.trunk_width = width;
  s.trunk_depth = 4;
  s.head_width = width / 2;
  return s;
}

Batch random_batch(int in, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Batch b;
  b.features.resize(in, n);
  for (Eigen::Index i = 0; i < b.features.size(); ++i) b.features.data()[i] = u(rng);
  for (int k = 0; k < n; ++k) {
    b.targets.push_back(0.5 * (u(rng) + 1));
    b.channel.push_back(static_cast<std::uint8_t>(k % 2));
  }
  return b;
}

void BM_Encode(benchmark::State& state) {
  const FourierBasis basis = sample_basis(64, 2.0, 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Coords x(3, state.range(0));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(encode_batch(x, basis));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Encode)->Arg(1000)->Arg(16384);

void BM_Forward(benchmark::State& state) {
  const SplitHeadModel m = SplitHeadModel::initialize(bench_shape(static_cast<int>(state.range(0))), 1);
  const Batch b = random_batch(128, 1000, 3);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward_batch(b.features));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Forward)->Arg(128)->Arg(256);

void BM_Backward(benchmark::State& state) {
  const SplitHeadModel m = SplitHeadModel::initialize(bench_shape(static_cast<int>(state.range(0))), 1);
  const Batch b = random_batch(128, 1000, 3);
  GradientBuffer g = m.make_gradient_buffer();
  for (auto _ : state) benchmark::DoNotOptimize(m.backward(b, LossWeights{}, g));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Backward)->Arg(128)->Arg(256);

void BM_AdamStep(benchmark::State& state) {
  std::vector<float> params(static_cast<std::size_t>(state.range(0)), 0.1f);
  const std::vector<double> grads(params.size(), 1e-3);
  AdamState s = AdamState::for_size(params.size());
  for (auto _ : state) adam_step<float>(params, grads, s, 1e-6);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AdamStep)->Arg(1 << 20);

void BM_MutualInformation(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Volume a = make_smooth_volume(Dims{n, n, n}, 1.0, 1, 4.0);
  const Volume b = make_smooth_volume(Dims{n, n, n}, 1.0, 2, 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(mutual_information(a, b));
  state.SetItemsProcessed(state.iterations() * a.size());
}
BENCHMARK(BM_MutualInformation)->Arg(48)->Arg(96);

void BM_Ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Volume a = make_smooth_volume(Dims{n, n, n}, 1.0, 1, 4.0);
  const Volume b = make_smooth_volume(Dims{n, n, n}, 1.0, 2, 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
  state.SetItemsProcessed(state.iterations() * a.size());
}
BENCHMARK(BM_Ssim)->Arg(48)->Arg(96);

void BM_DegradeUpsample(benchmark::State& state) {
  const Volume gt = make_smooth_volume(Dims{96, 96, 96}, 1.0, 3, 6.0);
  for (auto _ : state) {
    const Volume lr = simulate_acquisition(gt, AcquisitionSpec{});
    benchmark::DoNotOptimize(cubic_spline_upsample(lr, GridSpec{gt.dims(), gt.affine()}));
  }
}
BENCHMARK(BM_DegradeUpsample)->Unit(benchmark::kMillisecond);

void BM_Phantom(benchmark::State& state) {
  const PhantomSpec spec = default_phantom_spec(0, Dims{64, 64, 64}, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(make_phantom(spec));
}
BENCHMARK(BM_Phantom)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

// Reference (serial) kernels against the OpenMP ones. Set OMP_NUM_THREADS to
// compare thread counts.
#include <benchmark/benchmark.h>

#include <vector>

#include "bookrel/kernels.hpp"
#include "bookrel/reference_kernels.hpp"
#include "bookrel/rng.hpp"

using namespace bookrel;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

constexpr std::size_t kDim = 300;

void BM_CosineReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = noise(n * kDim, 1), b = noise(n * kDim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(reference::pairwise_cosine(a, n, b, n, kDim));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_CosineParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = noise(n * kDim, 1), b = noise(n * kDim, 2);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    kernels::pairwise_cosine(a, n, b, n, kDim, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_ConvReference(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const kernels::Shape3 in{8, s, s};
  const auto x = noise(in.size(), 3), w = noise(16 * 8 * 9, 4), b = noise(16, 5);
  for (auto _ : state) benchmark::DoNotOptimize(reference::conv2d_forward(x, in, w, b, 16, 3));
}

void BM_ConvParallel(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const kernels::Shape3 in{8, s, s};
  const auto x = noise(in.size(), 3), w = noise(16 * 8 * 9, 4), b = noise(16, 5);
  std::vector<double> out(kernels::conv_output_shape(in, 16, 3).size());
  for (auto _ : state) {
    kernels::conv2d_forward(x, in, w, b, 16, 3, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ConvBackwardReference(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const kernels::Shape3 in{8, s, s};
  const auto x = noise(in.size(), 3), w = noise(16 * 8 * 9, 4);
  const auto g = noise(kernels::conv_output_shape(in, 16, 3).size(), 6);
  for (auto _ : state) benchmark::DoNotOptimize(reference::conv2d_backward(x, in, w, 16, 3, g));
}

void BM_ConvBackwardParallel(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const kernels::Shape3 in{8, s, s};
  const auto x = noise(in.size(), 3), w = noise(16 * 8 * 9, 4);
  const auto g = noise(kernels::conv_output_shape(in, 16, 3).size(), 6);
  std::vector<double> gi(in.size()), gw(w.size()), gb(16);
  for (auto _ : state) {
    kernels::conv2d_backward(x, in, w, 16, 3, g, gi, gw, gb);
    benchmark::DoNotOptimize(gi.data());
  }
}

void BM_PoolReference(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const kernels::Shape3 in{16, s, s};
  const auto x = noise(in.size(), 7);
  for (auto _ : state) benchmark::DoNotOptimize(reference::maxpool2x2_forward(x, in));
}

void BM_PoolParallel(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const kernels::Shape3 in{16, s, s};
  const auto x = noise(in.size(), 7);
  const auto out_shape = kernels::pool_output_shape(in);
  std::vector<double> out(out_shape.size());
  std::vector<std::uint32_t> arg(out_shape.size());
  for (auto _ : state) {
    kernels::maxpool2x2_forward(x, in, out, arg);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_CosineReference)->Arg(32)->Arg(128);
BENCHMARK(BM_CosineParallel)->Arg(32)->Arg(128);
BENCHMARK(BM_ConvReference)->Arg(32)->Arg(64);
BENCHMARK(BM_ConvParallel)->Arg(32)->Arg(64);
BENCHMARK(BM_ConvBackwardReference)->Arg(32)->Arg(64);
BENCHMARK(BM_ConvBackwardParallel)->Arg(32)->Arg(64);
BENCHMARK(BM_PoolReference)->Arg(32)->Arg(64);
BENCHMARK(BM_PoolParallel)->Arg(32)->Arg(64);

BENCHMARK_MAIN();

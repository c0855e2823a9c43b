// Parallel kernels against the serial reference at the model's layer sizes.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "cardionet/kernels.hpp"
#include "cardionet/rng.hpp"

using namespace cardionet;

namespace {

std::vector<float> random(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// Args: height, in channels, out channels, kernel, stride.
kernels::ConvGeometry geometry(const benchmark::State& s) {
  const auto h = static_cast<std::size_t>(s.range(0)), k = static_cast<std::size_t>(s.range(3));
  return kernels::ConvGeometry::same(h, h, s.range(1), s.range(2), k, k, s.range(4));
}

template <bool Parallel>
void conv_forward(benchmark::State& state) {
  const auto g = geometry(state);
  const auto in = random(g.height * g.width * g.in_channels, 1);
  const auto ker = random(g.kernel_h * g.kernel_w * g.in_channels * g.out_channels, 2);
  const auto bias = random(g.out_channels, 3);
  std::vector<float> out(g.out_height * g.out_width * g.out_channels);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::conv2d_forward<float>(in, ker, bias, out, g);
    else
      kernels::reference::conv2d_forward<float>(in, ker, bias, out, g);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void conv_backward_kernel(benchmark::State& state) {
  const auto g = geometry(state);
  const auto in = random(g.height * g.width * g.in_channels, 1);
  const auto dout = random(g.out_height * g.out_width * g.out_channels, 2);
  std::vector<float> dk(g.kernel_h * g.kernel_w * g.in_channels * g.out_channels);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::conv2d_backward_kernel<float>(in, dout, dk, g);
    else
      kernels::reference::conv2d_backward_kernel<float>(in, dout, dk, g);
    benchmark::DoNotOptimize(dk.data());
  }
}

template <bool Parallel>
void matmul(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0)), k = static_cast<std::size_t>(state.range(1)),
             n = static_cast<std::size_t>(state.range(2));
  const auto a = random(m * k, 1), b = random(k * n, 2);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::matmul<float>(a, b, c, m, k, n);
    else
      kernels::reference::matmul<float>(a, b, c, m, k, n);
    benchmark::DoNotOptimize(c.data());
  }
}

template <bool Parallel>
void pool_forward(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0)), c = static_cast<std::size_t>(state.range(1));
  const auto g = kernels::PoolGeometry::make(h, h, c, 2, 2);
  const auto in = random(h * h * c, 1);
  std::vector<float> out(g.out_height * g.out_width * c);
  std::vector<std::size_t> arg(out.size());
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::pool2d_forward<float>(in, out, arg, kernels::PoolKind::Max, g);
    else
      kernels::reference::pool2d_forward<float>(in, out, kernels::PoolKind::Max, g);
    benchmark::DoNotOptimize(out.data());
  }
}

// Stem on the 96x96 input, then a 3x3 and a 5x5 inception branch at 24x24.
void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({96, 3, 16, 3, 2})->Args({24, 32, 32, 3, 1})->Args({24, 32, 16, 5, 1})->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(conv_forward<false>)->Name("conv_forward/reference")->Apply(conv_args);
BENCHMARK(conv_forward<true>)->Name("conv_forward/parallel")->Apply(conv_args);
BENCHMARK(conv_backward_kernel<false>)->Name("conv_backward_kernel/reference")->Apply(conv_args);
BENCHMARK(conv_backward_kernel<true>)->Name("conv_backward_kernel/parallel")->Apply(conv_args);
BENCHMARK(matmul<false>)->Name("matmul/reference")->Args({64, 32, 512})->Args({1, 2048, 512});
BENCHMARK(matmul<true>)->Name("matmul/parallel")->Args({64, 32, 512})->Args({1, 2048, 512});
BENCHMARK(pool_forward<false>)->Name("pool_forward/reference")->Args({48, 16})->Args({24, 64});
BENCHMARK(pool_forward<true>)->Name("pool_forward/parallel")->Args({48, 16})->Args({24, 64});

BENCHMARK_MAIN();

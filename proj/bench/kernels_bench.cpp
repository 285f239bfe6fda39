// SPDX-License-Identifier: Apache-2.0
// Serial reference kernels against the tiled OpenMP kernels on the shapes the
// desk-scale model uses (C = 32, 16x16 and 8x8 grids, batch 16).
#include <benchmark/benchmark.h>

#include "hig/core/kernels.hpp"
#include "hig/core/random.hpp"

namespace k = hig::kernels;
using hig::Real;

namespace {

std::vector<Real> randn(std::size_t n) {
  hig::Rng rng(n);
  return rng.normal_vector(n);
}

template <bool Reference>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0)), n = m, kk = m;
  const auto a = randn(m * kk), b = randn(kk * n);
  std::vector<Real> c(m * n);
  for (auto _ : state) {
    if constexpr (Reference) k::reference::gemm_nn(m, n, kk, a.data(), b.data(), c.data(), false);
    else k::gemm_nn(m, n, kk, a.data(), b.data(), c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * m * n * kk));
}

k::ConvShape conv_shape(const benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  return {16, 32, 32, side, side, 3};
}

template <bool Reference>
void BM_ConvForward(benchmark::State& state) {
  const auto s = conv_shape(state);
  const auto x = randn(s.batch * s.in_channels * s.pixels()), w = randn(s.out_channels * s.patch());
  std::vector<Real> y(s.batch * s.out_channels * s.pixels());
  for (auto _ : state) {
    if constexpr (Reference) k::reference::conv2d_forward(s, x.data(), w.data(), y.data());
    else k::conv2d_forward(s, x.data(), w.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Reference>
void BM_ConvBackward(benchmark::State& state) {
  const auto s = conv_shape(state);
  const auto x = randn(s.batch * s.in_channels * s.pixels()), w = randn(s.out_channels * s.patch());
  const auto dy = randn(s.batch * s.out_channels * s.pixels());
  std::vector<Real> dx(x.size()), dw(w.size());
  for (auto _ : state) {
    if constexpr (Reference) {
      k::reference::conv2d_backward_input(s, dy.data(), w.data(), dx.data());
      k::reference::conv2d_backward_weight(s, x.data(), dy.data(), dw.data());
    } else {
      k::conv2d_backward_input(s, dy.data(), w.data(), dx.data());
      k::conv2d_backward_weight(s, x.data(), dy.data(), dw.data());
    }
    benchmark::DoNotOptimize(dx.data());
    benchmark::DoNotOptimize(dw.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<true>)->Name("gemm_nn/reference")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<false>)->Name("gemm_nn/tiled")->Arg(64)->Arg(256);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/reference")->Arg(8)->Arg(16);
BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/tiled")->Arg(8)->Arg(16);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/reference")->Arg(8)->Arg(16);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/tiled")->Arg(8)->Arg(16);

BENCHMARK_MAIN();

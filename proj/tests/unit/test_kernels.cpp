// SPDX-License-Identifier: Apache-2.0
// Parallel kernels agree with the serial reference to rounding, and are
// bit-identical across thread counts.
#include <array>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "hig/core/kernels.hpp"
#include "hig/core/random.hpp"

using namespace hig;
namespace k = hig::kernels;

namespace {

std::vector<Real> randn(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return rng.normal_vector(n);
}

bool same_bits(const std::vector<Real>& a, const std::vector<Real>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(Real)) == 0;
}

// Tiled kernels may contract to FMA and so differ from the reference in the
// last bits; the bound scales with the reduction length.
bool close(const std::vector<Real>& a, const std::vector<Real>& b, std::size_t k) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 1e-13 * static_cast<double>(k) * (1 + std::abs(b[i]))) return false;
  return true;
}

struct ThreadGuard {
  int saved = k::num_threads();
  ~ThreadGuard() { k::set_num_threads(saved); }
};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("gemm variants match the reference") {
    ThreadGuard guard;
    using Dims = std::array<std::size_t, 3>;
    for (const Dims& d : {Dims{1, 1, 1}, Dims{7, 13, 5}, Dims{64, 33, 96}, Dims{130, 257, 17}}) {
      const auto [m, n, kk] = d;
      const auto a = randn(m * kk, 1), b = randn(kk * n, 2), bt = randn(n * kk, 3), at = randn(kk * m, 4);
      for (bool acc : {false, true}) {
        std::vector<std::vector<Real>> by_threads;
        for (int threads : {1, 3}) {
          k::set_num_threads(threads);
          auto c0 = randn(m * n, 5), c1 = c0, c2 = c0, r0 = c0, r1 = c0, r2 = c0;
          k::gemm_nn(m, n, kk, a.data(), b.data(), c0.data(), acc);
          k::reference::gemm_nn(m, n, kk, a.data(), b.data(), r0.data(), acc);
          k::gemm_nt(m, n, kk, a.data(), bt.data(), c1.data(), acc);
          k::reference::gemm_nt(m, n, kk, a.data(), bt.data(), r1.data(), acc);
          k::gemm_tn(m, n, kk, at.data(), b.data(), c2.data(), acc);
          k::reference::gemm_tn(m, n, kk, at.data(), b.data(), r2.data(), acc);
          CHECK(close(c0, r0, kk));
          CHECK(close(c1, r1, kk));
          CHECK(close(c2, r2, kk));
          c0.insert(c0.end(), c1.begin(), c1.end());
          c0.insert(c0.end(), c2.begin(), c2.end());
          by_threads.push_back(std::move(c0));
        }
        CHECK(same_bits(by_threads[0], by_threads[1]));
      }
    }
  }

  TEST_CASE("convolution passes match the reference") {
    ThreadGuard guard;
    for (std::size_t kernel : {1, 3}) {
      k::ConvShape s{2, 5, 6, 8, 7, kernel};
      const auto x = randn(s.batch * s.in_channels * s.pixels(), 10);
      const auto w = randn(s.out_channels * s.patch(), 11);
      const auto dy = randn(s.batch * s.out_channels * s.pixels(), 12);
      std::vector<std::vector<Real>> by_threads;
      for (int threads : {1, 4}) {
        k::set_num_threads(threads);
        std::vector<Real> y0(dy.size()), y1(dy.size());
        k::conv2d_forward(s, x.data(), w.data(), y0.data());
        k::reference::conv2d_forward(s, x.data(), w.data(), y1.data());
        CHECK(close(y0, y1, s.patch()));
        auto dx0 = randn(x.size(), 13), dx1 = dx0;
        k::conv2d_backward_input(s, dy.data(), w.data(), dx0.data());
        k::reference::conv2d_backward_input(s, dy.data(), w.data(), dx1.data());
        CHECK(close(dx0, dx1, s.out_channels * s.kernel * s.kernel));
        auto dw0 = randn(w.size(), 14), dw1 = dw0;
        k::conv2d_backward_weight(s, x.data(), dy.data(), dw0.data());
        k::reference::conv2d_backward_weight(s, x.data(), dy.data(), dw1.data());
        CHECK(close(dw0, dw1, s.batch * s.pixels()));
        y0.insert(y0.end(), dx0.begin(), dx0.end());
        y0.insert(y0.end(), dw0.begin(), dw0.end());
        by_threads.push_back(std::move(y0));
      }
      CHECK(same_bits(by_threads[0], by_threads[1]));
    }
  }

  TEST_CASE("1x1 convolution is a per-pixel matrix product") {
    k::ConvShape s{1, 2, 1, 1, 2, 1};
    const std::vector<Real> x = {1, 2, 3, 4}, w = {10, 100};
    std::vector<Real> y(2);
    k::reference::conv2d_forward(s, x.data(), w.data(), y.data());
    CHECK(y[0] == 310);
    CHECK(y[1] == 420);
  }
}

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "hig/core/real.hpp"

// Dense compute kernels. The default namespace holds the OpenMP-parallel
// versions used by the ops; `reference` holds plain serial loops kept for
// testing and benchmarking. Every parallel kernel partitions work over
// output elements only and sums in a fixed order, so results do not depend
// on the thread count.
namespace hig::kernels {

void set_num_threads(int threads);
int num_threads();

// Stride-1 "same" convolution with an odd square kernel.
struct ConvShape {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t kernel = 3;

  std::size_t patch() const { return in_channels * kernel * kernel; }
  std::size_t pixels() const { return height * width; }
};

// c[m×n] (+)= a[m×k] · b[k×n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate);
// c[m×n] (+)= a[m×k] · b[n×k]ᵀ
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate);
// c[m×n] (+)= a[k×m]ᵀ · b[k×n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate);

// y[B,Cout,H,W] = conv(x[B,Cin,H,W], w[Cout,Cin,K,K])
void conv2d_forward(const ConvShape& s, const Real* x, const Real* w, Real* y);
// dx += convᵀ(dy, w)
void conv2d_backward_input(const ConvShape& s, const Real* dy, const Real* w, Real* dx);
// dw += Σ_b dy_b ⋆ x_b
void conv2d_backward_weight(const ConvShape& s, const Real* x, const Real* dy, Real* dw);

namespace reference {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate);
void conv2d_forward(const ConvShape& s, const Real* x, const Real* w, Real* y);
void conv2d_backward_input(const ConvShape& s, const Real* dy, const Real* w, Real* dx);
void conv2d_backward_weight(const ConvShape& s, const Real* x, const Real* dy, Real* dw);

}  // namespace reference

}  // namespace hig::kernels

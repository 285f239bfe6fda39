// SPDX-License-Identifier: Apache-2.0
#include "hig/core/kernels.hpp"

namespace hig::kernels::reference {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real acc = accumulate ? c[i * n + j] : Real(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real acc = accumulate ? c[i * n + j] : Real(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real acc = accumulate ? c[i * n + j] : Real(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

namespace {

// Visits every (output pixel, kernel tap) pair whose input pixel lies inside
// the image; zero padding is implicit.
template <class F>
void for_each_tap(const ConvShape& s, F&& f) {
  const long half = static_cast<long>(s.kernel / 2);
  const long h = static_cast<long>(s.height);
  const long w = static_cast<long>(s.width);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (long ky = 0; ky < static_cast<long>(s.kernel); ++ky)
        for (long kx = 0; kx < static_cast<long>(s.kernel); ++kx) {
          const long iy = y + ky - half;
          const long ix = x + kx - half;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
          f(static_cast<std::size_t>(y * w + x), static_cast<std::size_t>(iy * w + ix),
            static_cast<std::size_t>(ky * static_cast<long>(s.kernel) + kx));
        }
}

}  // namespace

void conv2d_forward(const ConvShape& s, const Real* x, const Real* w, Real* y) {
  const std::size_t hw = s.pixels();
  const std::size_t kk = s.kernel * s.kernel;
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t o = 0; o < s.out_channels; ++o) {
      Real* yo = y + (b * s.out_channels + o) * hw;
      for (std::size_t p = 0; p < hw; ++p) yo[p] = 0;
      for (std::size_t c = 0; c < s.in_channels; ++c) {
        const Real* xc = x + (b * s.in_channels + c) * hw;
        const Real* wk = w + (o * s.in_channels + c) * kk;
        for_each_tap(s, [&](std::size_t out, std::size_t in, std::size_t tap) {
          yo[out] += wk[tap] * xc[in];
        });
      }
    }
}

void conv2d_backward_input(const ConvShape& s, const Real* dy, const Real* w, Real* dx) {
  const std::size_t hw = s.pixels();
  const std::size_t kk = s.kernel * s.kernel;
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t o = 0; o < s.out_channels; ++o) {
      const Real* dyo = dy + (b * s.out_channels + o) * hw;
      for (std::size_t c = 0; c < s.in_channels; ++c) {
        Real* dxc = dx + (b * s.in_channels + c) * hw;
        const Real* wk = w + (o * s.in_channels + c) * kk;
        for_each_tap(s, [&](std::size_t out, std::size_t in, std::size_t tap) {
          dxc[in] += wk[tap] * dyo[out];
        });
      }
    }
}

void conv2d_backward_weight(const ConvShape& s, const Real* x, const Real* dy, Real* dw) {
  const std::size_t hw = s.pixels();
  const std::size_t kk = s.kernel * s.kernel;
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t o = 0; o < s.out_channels; ++o) {
      const Real* dyo = dy + (b * s.out_channels + o) * hw;
      for (std::size_t c = 0; c < s.in_channels; ++c) {
        const Real* xc = x + (b * s.in_channels + c) * hw;
        Real* dwk = dw + (o * s.in_channels + c) * kk;
        for_each_tap(s, [&](std::size_t out, std::size_t in, std::size_t tap) {
          dwk[tap] += dyo[out] * xc[in];
        });
      }
    }
}

}  // namespace hig::kernels::reference

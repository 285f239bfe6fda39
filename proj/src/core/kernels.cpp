// SPDX-License-Identifier: Apache-2.0
#include "hig/core/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include <omp.h>

namespace hig::kernels {

void set_num_threads(int threads) { omp_set_num_threads(std::max(1, threads)); }
int num_threads() { return omp_get_max_threads(); }

namespace {

constexpr std::size_t kRowTile = 6;
constexpr std::size_t kColTile = 16;

// GCC/Clang vector extension; the tile below lowers to packed FMAs.
constexpr std::size_t kLanes = 64 / sizeof(Real);
typedef Real Vec __attribute__((vector_size(64)));
constexpr std::size_t kVecPerTile = kColTile / kLanes;

inline Vec load(const Real* p) {
  Vec v;
  std::memcpy(&v, p, sizeof(Vec));
  return v;
}
inline void store(Real* p, const Vec& v) { std::memcpy(p, &v, sizeof(Vec)); }

// Register-tiled kRowTile × kColTile block of c, each element summed over p
// in ascending order.
inline void tile_full(std::size_t k, const Real* a, std::size_t lda, const Real* b,
                      std::size_t ldb, Real* c, std::size_t ldc, bool accumulate) {
  Vec t[kRowTile][kVecPerTile];
  for (std::size_t r = 0; r < kRowTile; ++r)
    for (std::size_t v = 0; v < kVecPerTile; ++v)
      t[r][v] = accumulate ? load(c + r * ldc + v * kLanes) : Vec{};
  for (std::size_t p = 0; p < k; ++p) {
    Vec bp[kVecPerTile];
    for (std::size_t v = 0; v < kVecPerTile; ++v) bp[v] = load(b + p * ldb + v * kLanes);
    for (std::size_t r = 0; r < kRowTile; ++r) {
      const Real ar = a[r * lda + p];
      for (std::size_t v = 0; v < kVecPerTile; ++v) t[r][v] += ar * bp[v];
    }
  }
  for (std::size_t r = 0; r < kRowTile; ++r)
    for (std::size_t v = 0; v < kVecPerTile; ++v) store(c + r * ldc + v * kLanes, t[r][v]);
}

inline void tile_edge(std::size_t rows, std::size_t cols, std::size_t k, const Real* a,
                      std::size_t lda, const Real* b, std::size_t ldb, Real* c, std::size_t ldc,
                      bool accumulate) {
  Real t[kRowTile][kColTile];
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) t[r][j] = accumulate ? c[r * ldc + j] : Real(0);
  for (std::size_t p = 0; p < k; ++p) {
    const Real* bp = b + p * ldb;
    for (std::size_t r = 0; r < rows; ++r) {
      const Real ar = a[r * lda + p];
      for (std::size_t j = 0; j < cols; ++j) t[r][j] += ar * bp[j];
    }
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) c[r * ldc + j] = t[r][j];
}

inline void row_block(std::size_t i0, std::size_t m, std::size_t n, std::size_t k, const Real* a,
                      const Real* b, Real* c, bool accumulate) {
  const std::size_t rows = std::min(kRowTile, m - i0);
  for (std::size_t j0 = 0; j0 < n; j0 += kColTile) {
    const std::size_t cols = std::min(kColTile, n - j0);
    const Real* ab = a + i0 * k;
    const Real* bb = b + j0;
    Real* cb = c + i0 * n + j0;
    if (rows == kRowTile && cols == kColTile)
      tile_full(k, ab, k, bb, n, cb, n, accumulate);
    else
      tile_edge(rows, cols, k, ab, k, bb, n, cb, n, accumulate);
  }
}

void gemm_nn_serial(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
                    Real* c, bool accumulate) {
  for (std::size_t i0 = 0; i0 < m; i0 += kRowTile) row_block(i0, m, n, k, a, b, c, accumulate);
}

void transpose(std::size_t rows, std::size_t cols, const Real* src, Real* dst) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

void im2col(const ConvShape& s, const Real* x, Real* col) {
  const long half = static_cast<long>(s.kernel / 2);
  const long h = static_cast<long>(s.height);
  const long w = static_cast<long>(s.width);
  const std::size_t hw = s.pixels();
  for (std::size_t c = 0; c < s.in_channels; ++c) {
    const Real* xc = x + c * hw;
    for (long ky = 0; ky < static_cast<long>(s.kernel); ++ky)
      for (long kx = 0; kx < static_cast<long>(s.kernel); ++kx) {
        Real* row = col + ((c * s.kernel + ky) * s.kernel + kx) * hw;
        for (long y = 0; y < h; ++y) {
          const long iy = y + ky - half;
          Real* out = row + y * w;
          if (iy < 0 || iy >= h) {
            std::fill(out, out + w, Real(0));
            continue;
          }
          for (long xx = 0; xx < w; ++xx) {
            const long ix = xx + kx - half;
            out[xx] = (ix < 0 || ix >= w) ? Real(0) : xc[iy * w + ix];
          }
        }
      }
  }
}

// dx += col2im(col)
void col2im_add(const ConvShape& s, const Real* col, Real* dx) {
  const long half = static_cast<long>(s.kernel / 2);
  const long h = static_cast<long>(s.height);
  const long w = static_cast<long>(s.width);
  const std::size_t hw = s.pixels();
  for (std::size_t c = 0; c < s.in_channels; ++c) {
    Real* dxc = dx + c * hw;
    for (long ky = 0; ky < static_cast<long>(s.kernel); ++ky)
      for (long kx = 0; kx < static_cast<long>(s.kernel); ++kx) {
        const Real* row = col + ((c * s.kernel + ky) * s.kernel + kx) * hw;
        for (long y = 0; y < h; ++y) {
          const long iy = y + ky - half;
          if (iy < 0 || iy >= h) continue;
          for (long xx = 0; xx < w; ++xx) {
            const long ix = xx + kx - half;
            if (ix >= 0 && ix < w) dxc[iy * w + ix] += row[y * w + xx];
          }
        }
      }
  }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate) {
  const long blocks = static_cast<long>((m + kRowTile - 1) / kRowTile);
#pragma omp parallel for schedule(static) if (m * n * k > 32768)
  for (long blk = 0; blk < blocks; ++blk)
    row_block(static_cast<std::size_t>(blk) * kRowTile, m, n, k, a, b, c, accumulate);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate) {
  std::vector<Real> bt(n * k);
  transpose(n, k, b, bt.data());
  gemm_nn(m, n, k, a, bt.data(), c, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             bool accumulate) {
  std::vector<Real> at(m * k);
  transpose(k, m, a, at.data());
  gemm_nn(m, n, k, at.data(), b, c, accumulate);
}

void conv2d_forward(const ConvShape& s, const Real* x, const Real* w, Real* y) {
  const std::size_t hw = s.pixels();
  const long batch = static_cast<long>(s.batch);
#pragma omp parallel
  {
    std::vector<Real> col(s.patch() * hw);
#pragma omp for schedule(static)
    for (long b = 0; b < batch; ++b) {
      im2col(s, x + b * s.in_channels * hw, col.data());
      gemm_nn_serial(s.out_channels, hw, s.patch(), w, col.data(), y + b * s.out_channels * hw,
                     false);
    }
  }
}

void conv2d_backward_input(const ConvShape& s, const Real* dy, const Real* w, Real* dx) {
  const std::size_t hw = s.pixels();
  std::vector<Real> wt(s.patch() * s.out_channels);
  transpose(s.out_channels, s.patch(), w, wt.data());
  const long batch = static_cast<long>(s.batch);
#pragma omp parallel
  {
    std::vector<Real> col(s.patch() * hw);
#pragma omp for schedule(static)
    for (long b = 0; b < batch; ++b) {
      gemm_nn_serial(s.patch(), hw, s.out_channels, wt.data(), dy + b * s.out_channels * hw,
                     col.data(), false);
      col2im_add(s, col.data(), dx + b * s.in_channels * hw);
    }
  }
}

void conv2d_backward_weight(const ConvShape& s, const Real* x, const Real* dy, Real* dw) {
  const std::size_t hw = s.pixels();
  const std::size_t wsize = s.out_channels * s.patch();
  std::vector<Real> partial(s.batch * wsize);
  const long batch = static_cast<long>(s.batch);
#pragma omp parallel
  {
    std::vector<Real> col(s.patch() * hw);
    std::vector<Real> colt(hw * s.patch());
#pragma omp for schedule(static)
    for (long b = 0; b < batch; ++b) {
      im2col(s, x + b * s.in_channels * hw, col.data());
      transpose(s.patch(), hw, col.data(), colt.data());
      gemm_nn_serial(s.out_channels, s.patch(), hw, dy + b * s.out_channels * hw, colt.data(),
                     partial.data() + b * wsize, false);
    }
  }
  // Fixed-order reduction over the batch keeps dw independent of threads.
  for (std::size_t b = 0; b < s.batch; ++b) {
    const Real* p = partial.data() + b * wsize;
    for (std::size_t i = 0; i < wsize; ++i) dw[i] += p[i];
  }
}

}  // namespace hig::kernels

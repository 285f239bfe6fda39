// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "hig/core/diff_array.hpp"

// Differentiable building blocks shared by the GNN and the denoiser.
// Image tensors are (B, C, H, W); node/row tensors are (rows, features).
namespace hig::nn {

DiffArray add(const DiffArray& a, const DiffArray& b);
DiffArray sub(const DiffArray& a, const DiffArray& b);
DiffArray mul(const DiffArray& a, const DiffArray& b);
DiffArray scale(const DiffArray& x, Real s);
DiffArray add_scalar(const DiffArray& x, Real s);
DiffArray silu(const DiffArray& x);

// x[b, ...] * s[b] with constant per-batch factors.
DiffArray scale_batch(const DiffArray& x, const std::vector<Real>& per_batch);

// x: (rows, in), w: (out, in) -> (rows, out)
DiffArray linear(const DiffArray& x, const DiffArray& w);

// x: (B, Cin, H, W), w: (Cout, Cin, K, K), stride 1, zero "same" padding.
DiffArray conv2d(const DiffArray& x, const DiffArray& w);

DiffArray avg_pool2(const DiffArray& x);
DiffArray upsample_nearest2(const DiffArray& x);

// Plain concatenation along axis.
DiffArray concat(const DiffArray& a, const DiffArray& b, std::size_t axis);

// x: (B, C, H, W) times m: (B, C) broadcast over pixels.
DiffArray channel_modulate(const DiffArray& x, const DiffArray& m);

// (B, C, H, W) -> (B*H*W, C); node k of batch b is pixel (k / W, k % W).
DiffArray image_to_rows(const DiffArray& x);
// (B*H*W, C) -> (B, C, H, W)
DiffArray rows_to_image(const DiffArray& rows, std::size_t batch, std::size_t height,
                        std::size_t width);

// out[e] = x[index[e]]
DiffArray gather_rows(const DiffArray& x, const std::vector<std::uint32_t>& index);

// Segment i covers rows offsets[i]..offsets[i+1] of `rows`;
// out[i] = row_scale[i] * sum of its rows (zero for empty segments).
DiffArray segment_sum(const DiffArray& rows, const std::vector<std::size_t>& offsets,
                      const std::vector<Real>& row_scale);

// Row-wise where: rows flagged 1 add b, flagged 0 keep a (plain addition).
DiffArray add_where(const DiffArray& a, const DiffArray& b,
                    const std::vector<unsigned char>& use_b);

DiffArray sum(const DiffArray& x);

// (1/B) sum_b weight[b] * mean_{i in batch b} (pred - target)^2
DiffArray weighted_mse(const DiffArray& pred, const DiffArray& target,
                       const std::vector<Real>& weight);

}  // namespace hig::nn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hig/core/diff_array.hpp"

// Magnitude-preserving primitives. Each keeps the expected per-element
// second moment of unit-variance, independent inputs at one.
namespace hig::mp {

inline constexpr Real kDefaultWeightEpsilon = Real(1e-4);

// sqrt(E[silu(z)^2]) for z ~ N(0,1), integrated numerically once per process.
Real silu_normalizer();

// Row-wise w / (||w||_2 + eps); rows are the leading axis, the rest of each
// row is flattened; a 1-D weight is one row. Gradients flow through the norm.
DiffArray forced_weight_norm(const DiffArray& w, Real eps = kDefaultWeightEpsilon);

// ((1-t) a + t b) / sqrt((1-t)^2 + t^2)
DiffArray mp_sum(const DiffArray& a, const DiffArray& b, Real t);

// mp_sum with a learnable blend t = t_max * gain (gain is a scalar array).
// At gain == 0 the output is bit-identical to `a`.
DiffArray mp_sum_gated(const DiffArray& a, const DiffArray& b, const DiffArray& gain, Real t_max);

// Row-wise mp_sum: rows whose flag is 0 pass `a` through untouched.
// a, b: (rows, d).
DiffArray mp_sum_where(const DiffArray& a, const DiffArray& b, Real t,
                       const std::vector<unsigned char>& use_b);

// Concatenation along `axis`, rescaled so the result keeps unit magnitude:
// sqrt((Na+Nb)/((1-t)^2+t^2)) * [(1-t)/sqrt(Na) a  ⊕  t/sqrt(Nb) b]
DiffArray mp_cat(const DiffArray& a, const DiffArray& b, Real t, std::size_t axis);

// silu(x) / silu_normalizer()
DiffArray mp_silu(const DiffArray& x);

// x / sqrt(mean(x^2 along axis) + eps)
DiffArray pixel_norm(const DiffArray& x, Real eps, std::size_t axis);

// (sum_i a_i) / sqrt(N)
DiffArray normalized_sum(const std::vector<DiffArray>& arrays);

// gain * x, gain a scalar array initialised to zero by callers.
DiffArray zero_gain(const DiffArray& x, const DiffArray& gain);

}  // namespace hig::mp

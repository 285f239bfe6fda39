// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hig/core/diff_array.hpp"
#include "hig/core/mp_ops.hpp"
#include "hig/graph/hetero_graph.hpp"

namespace hig::gnn {

// kNaive drops every magnitude-preserving piece (raw weights, plain sums,
// plain concatenation); kPixNorm is kNaive followed by pixel_norm per block.
enum class Variant { kMagnitudePreserving, kNaive, kPixNorm };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct ConvOptions {
  Real t_sum = Real(0.3);
  Real t_cat = Real(0.5);
  Real weight_eps = mp::kDefaultWeightEpsilon;
  Variant variant = Variant::kMagnitudePreserving;
};

// Raw weights of one meta-path: w1 (C_out, C_dst), w2 (C_out, C_src [+ F_edge]).
struct PathWeights {
  DiffArray w1;
  DiffArray w2;
};

// Updates destination features along one meta-path.
//   deg(i) = 0: out_i = silu_mp(W1 x_i)
//   otherwise:  out_i = silu_mp(mp_sum(W1 x_i, W2 sum_j m_j / sqrt(deg(i)), t_sum))
// with m_j = mp_cat(x_j, a_j, t_cat) when `edge_attr` is given (rows indexed by
// edge id), else m_j = x_j.
DiffArray hig_conv(const DiffArray& x_dst, const DiffArray& x_src, const graph::NeighborIndex& nbr,
                   const DiffArray* edge_attr, const PathWeights& weights, const ConvOptions& opt);

// (sum of outputs) / sqrt(path_count); the naive variants skip the scaling.
DiffArray combine_meta_paths(const std::vector<DiffArray>& outputs, std::size_t path_count,
                             Variant variant = Variant::kMagnitudePreserving);

}  // namespace hig::gnn

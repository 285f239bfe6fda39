// SPDX-License-Identifier: Apache-2.0
#include "hig/gnn/hig_conv.hpp"

#include <cmath>

#include "hig/core/nn_ops.hpp"

namespace hig::gnn {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kMagnitudePreserving: return "mp";
    case Variant::kNaive: return "naive";
    case Variant::kPixNorm: return "pixnorm";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "mp") return Variant::kMagnitudePreserving;
  if (name == "naive") return Variant::kNaive;
  if (name == "pixnorm") return Variant::kPixNorm;
  throw Error("unknown GNN variant '" + name + "' (expected mp, naive or pixnorm)");
}

DiffArray hig_conv(const DiffArray& x_dst, const DiffArray& x_src, const graph::NeighborIndex& nbr,
                   const DiffArray* edge_attr, const PathWeights& weights, const ConvOptions& opt) {
  if (x_dst.ndim() != 2 || x_src.ndim() != 2) throw Error("hig_conv: features must be (rows, dim)");
  if (nbr.dst_count() != x_dst.dim(0)) throw Error("hig_conv: neighbour index does not match destination rows");
  const bool mp = opt.variant == Variant::kMagnitudePreserving;
  auto w1 = mp ? mp::forced_weight_norm(weights.w1, opt.weight_eps) : weights.w1;
  auto self = nn::linear(x_dst, w1);
  if (nbr.src.empty()) return mp::mp_silu(self);

  auto messages = nn::gather_rows(x_src, nbr.src);
  const std::size_t expected_in = weights.w2.dim(1);
  if (edge_attr != nullptr) {
    if (!edge_attr->defined() || edge_attr->ndim() != 2)
      throw Error("hig_conv: missing edge attributes on an attributed path");
    auto attrs = nn::gather_rows(*edge_attr, nbr.edge_id);
    messages = mp ? mp::mp_cat(messages, attrs, opt.t_cat, 1) : nn::concat(messages, attrs, 1);
  }
  if (messages.dim(1) != expected_in)
    throw Error("hig_conv: message width " + std::to_string(messages.dim(1)) +
                " does not match W2 input width " + std::to_string(expected_in) +
                (edge_attr == nullptr ? " (edge attributes missing?)" : ""));

  std::vector<Real> scale(nbr.dst_count());
  std::vector<unsigned char> has_neighbors(nbr.dst_count());
  for (std::size_t i = 0; i < scale.size(); ++i) {
    has_neighbors[i] = nbr.degree[i] > 0;
    scale[i] = (mp && nbr.degree[i] > 0) ? Real(1) / std::sqrt(static_cast<Real>(nbr.degree[i])) : Real(1);
  }
  auto aggregated = nn::segment_sum(messages, nbr.offsets, scale);
  auto w2 = mp ? mp::forced_weight_norm(weights.w2, opt.weight_eps) : weights.w2;
  auto neighbor = nn::linear(aggregated, w2);
  auto mixed = mp ? mp::mp_sum_where(self, neighbor, opt.t_sum, has_neighbors)
                  : nn::add_where(self, neighbor, has_neighbors);
  return mp::mp_silu(mixed);
}

DiffArray combine_meta_paths(const std::vector<DiffArray>& outputs, std::size_t path_count,
                             Variant variant) {
  if (outputs.empty()) throw Error("combine_meta_paths: no path outputs");
  if (path_count == 0) throw Error("combine_meta_paths: zero path count");
  DiffArray acc = outputs.front();
  for (std::size_t i = 1; i < outputs.size(); ++i) acc = nn::add(acc, outputs[i]);
  if (variant != Variant::kMagnitudePreserving || path_count == 1) return acc;
  return nn::scale(acc, Real(1) / std::sqrt(static_cast<Real>(path_count)));
}

}  // namespace hig::gnn

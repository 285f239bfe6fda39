// SPDX-License-Identifier: Apache-2.0
#include "hig/gnn/hignn.hpp"

#include <cmath>
#include <limits>

#include "hig/core/nn_ops.hpp"

namespace hig::gnn {
namespace {

using graph::kind_index;
using graph::kNodeKindCount;
using graph::NodeKind;

constexpr Real kPixNormEps = Real(1e-4);

DiffArray project(const DiffArray& x, const DiffArray& w, const ConvOptions& opt) {
  if (opt.variant == Variant::kMagnitudePreserving)
    return nn::linear(x, mp::forced_weight_norm(w, opt.weight_eps));
  return nn::linear(x, w);
}

}  // namespace

HIGnnParams HIGnnParams::init(const HIGnnConfig& cfg, Rng& rng) {
  if (cfg.blocks == 0) throw Error("HIGnn needs at least one block");
  const auto C = cfg.channels;
  HIGnnParams p;
  p.image_in = model::init_weight({C, cfg.image_channels}, rng);
  p.image_out = model::init_weight({cfg.image_channels, C}, rng);
  for (std::size_t k = 1; k < kNodeKindCount; ++k) p.kind_in[k] = model::init_weight({C, cfg.feature_dim}, rng);
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    HIGBlockParams block;
    for (const auto& path : cfg.schema) {
      const auto in2 = path.has_edge_attr ? C + cfg.feature_dim : C;
      PathWeights w;
      w.w1 = model::init_weight({C, C}, rng);
      w.w2 = model::init_weight({C, in2}, rng);
      block.paths.push_back(std::move(w));
    }
    p.blocks.push_back(std::move(block));
  }
  return p;
}

void HIGnnParams::collect(const std::string& prefix, const HIGnnConfig& cfg,
                          model::NamedParams& out) const {
  out.emplace_back(prefix + "image_in", image_in);
  out.emplace_back(prefix + "image_out", image_out);
  for (std::size_t k = 1; k < kNodeKindCount; ++k)
    out.emplace_back(prefix + "in." + graph::node_kind_name(static_cast<NodeKind>(k)), kind_in[k]);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t p = 0; p < cfg.schema.size(); ++p) {
      const auto& path = cfg.schema[p];
      const auto base = prefix + "block" + std::to_string(b) + "." +
                        graph::node_kind_name(path.src) + "." + path.relation + "." +
                        graph::node_kind_name(path.dst) + ".";
      out.emplace_back(base + "w1", blocks[b].paths[p].w1);
      out.emplace_back(base + "w2", blocks[b].paths[p].w2);
    }
  }
}

GraphInputs prepare_inputs(const graph::HeteroImageGraph& g) {
  GraphInputs in;
  const auto F = g.feature_dim;
  const Real s = std::sqrt(static_cast<Real>(F));
  for (std::size_t k = 1; k < kNodeKindCount; ++k) {
    std::vector<Real> v = g.nodes[k].features;
    for (auto& x : v) x *= s;
    in.features[k] = DiffArray::constant({g.nodes[k].count, F}, std::move(v));
  }
  for (std::size_t p = 0; p < g.schema.size(); ++p) {
    const auto& e = g.edges[p];
    in.index.push_back(graph::neighbor_index(e, g.node_count(g.schema[p].dst)));
    if (!g.schema[p].has_edge_attr) {
      in.edge_attr.emplace_back();
      continue;
    }
    std::vector<Real> a = e.attr;
    for (auto& x : a) x *= s;
    in.edge_attr.push_back(DiffArray::constant({e.size(), e.attr_dim}, std::move(a)));
  }
  return in;
}

DiffArray image_to_nodes(const DiffArray& x_img, const DiffArray* proj, const ConvOptions& opt) {
  if (x_img.ndim() != 4) throw Error("image_to_nodes: expected a (B, C, H, W) array");
  auto rows = nn::image_to_rows(x_img);
  if (proj == nullptr) return rows;
  if (proj->dim(1) != x_img.dim(1))
    throw Error("image_to_nodes: projection expects " + std::to_string(proj->dim(1)) +
                " channels, image has " + std::to_string(x_img.dim(1)));
  return project(rows, *proj, opt);
}

DiffArray nodes_to_image(const DiffArray& nodes, const DiffArray* proj, std::size_t batch,
                         std::size_t height, std::size_t width, const ConvOptions& opt) {
  if (nodes.ndim() != 2 || nodes.dim(0) != batch * height * width)
    throw Error("nodes_to_image: node count does not match the image grid");
  auto rows = proj == nullptr ? nodes : project(nodes, *proj, opt);
  return nn::rows_to_image(rows, batch, height, width);
}

double rms(const DiffArray& x) {
  if (!x.defined() || x.numel() == 0) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (Real v : x.values()) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s / static_cast<double>(x.numel()));
}

std::array<std::size_t, kNodeKindCount> incoming_path_counts(const std::vector<graph::MetaPath>& schema) {
  std::array<std::size_t, kNodeKindCount> n{};
  for (const auto& p : schema) ++n[kind_index(p.dst)];
  return n;
}

DiffArray hignn_forward(const graph::HeteroImageGraph& g, const GraphInputs& inputs,
                        const DiffArray& x_img, const HIGnnParams& params, const HIGnnConfig& cfg,
                        HIGnnTrace* trace) {
  if (x_img.ndim() != 4 || x_img.dim(0) != g.batch || x_img.dim(2) != g.height ||
      x_img.dim(3) != g.width)
    throw Error("hignn: graph grid " + std::to_string(g.batch) + "x" + std::to_string(g.height) +
                "x" + std::to_string(g.width) + " does not match image " + shape_string(x_img.shape()));
  if (g.schema != cfg.schema) throw Error("hignn: graph schema differs from the model schema");
  if (g.feature_dim != cfg.feature_dim && g.conditioning_node_count() > 0)
    throw Error("hignn: graph feature width does not match the model");
  const auto& opt = cfg.conv;
  const auto C = cfg.channels;

  std::array<DiffArray, kNodeKindCount> x;
  x[kind_index(NodeKind::kImage)] = image_to_nodes(x_img, &params.image_in, opt);
  for (std::size_t k = 1; k < kNodeKindCount; ++k) {
    x[k] = g.nodes[k].count == 0 ? DiffArray::zeros({0, C})
                                 : project(inputs.features[k], params.kind_in[k], opt);
  }

  std::array<std::vector<std::size_t>, kNodeKindCount> incoming;
  for (std::size_t p = 0; p < cfg.schema.size(); ++p) incoming[kind_index(cfg.schema[p].dst)].push_back(p);

  for (const auto& block : params.blocks) {
    auto next = x;
    for (std::size_t d = 0; d < kNodeKindCount; ++d) {
      if (incoming[d].empty() || x[d].dim(0) == 0) continue;
      std::vector<std::size_t> used;
      if (cfg.per_graph_path_count)
        for (auto p : incoming[d])
          if (g.edges[p].size() > 0) used.push_back(p);
      if (used.empty()) used = incoming[d];
      std::vector<DiffArray> outs;
      for (auto p : used) {
        const auto& path = cfg.schema[p];
        const DiffArray* attr = path.has_edge_attr ? &inputs.edge_attr[p] : nullptr;
        outs.push_back(hig_conv(x[d], x[kind_index(path.src)], inputs.index[p], attr,
                                block.paths[p], opt));
      }
      next[d] = combine_meta_paths(outs, used.size(), opt.variant);
      if (opt.variant == Variant::kPixNorm) next[d] = mp::pixel_norm(next[d], kPixNormEps, 1);
    }
    x = std::move(next);
    if (trace != nullptr) {
      std::array<double, kNodeKindCount> r{};
      for (std::size_t k = 0; k < kNodeKindCount; ++k) r[k] = rms(x[k]);
      trace->block_rms.push_back(r);
    }
  }
  return nodes_to_image(x[kind_index(NodeKind::kImage)], &params.image_out, g.batch, g.height,
                        g.width, opt);
}

}  // namespace hig::gnn

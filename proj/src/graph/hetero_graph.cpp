// SPDX-License-Identifier: Apache-2.0
#include "hig/graph/hetero_graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

namespace hig::graph {

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::kImage: return "image";
    case NodeKind::kInstance: return "instance";
    case NodeKind::kMask: return "mask";
    case NodeKind::kClass: return "class";
  }
  return "unknown";
}

std::size_t HeteroImageGraph::node_count(NodeKind kind) const {
  if (kind == NodeKind::kImage) return batch * height * width;
  return nodes[kind_index(kind)].count;
}

std::size_t HeteroImageGraph::conditioning_node_count() const {
  return node_count(NodeKind::kInstance) + node_count(NodeKind::kMask) +
         node_count(NodeKind::kClass);
}

std::size_t HeteroImageGraph::path_index(const MetaPath& path) const {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].src == path.src && schema[i].dst == path.dst &&
        schema[i].relation == path.relation)
      return i;
  }
  throw Error(std::string("unknown meta-path ") + node_kind_name(path.src) + " -" +
              path.relation + "-> " + node_kind_name(path.dst));
}

void HeteroImageGraph::validate() const {
  if (edges.size() != schema.size()) throw Error("graph: edge tables do not match schema");
  if (nodes[kind_index(NodeKind::kImage)].count != 0 ||
      !nodes[kind_index(NodeKind::kImage)].features.empty())
    throw Error("graph: image nodes must not store features");
  for (std::size_t k = 1; k < kNodeKindCount; ++k) {
    if (nodes[k].features.size() != nodes[k].count * feature_dim)
      throw Error(std::string("graph: feature table size wrong for ") +
                  node_kind_name(static_cast<NodeKind>(k)) + " nodes");
  }
  if (!caption.empty() && caption.size() != batch * feature_dim)
    throw Error("graph: caption embedding has wrong size");
  std::set<std::tuple<NodeKind, std::string, NodeKind>> seen_paths;
  for (std::size_t p = 0; p < schema.size(); ++p) {
    const auto& mp = schema[p];
    if (!seen_paths.insert({mp.src, mp.relation, mp.dst}).second)
      throw Error("graph: duplicate meta-path " + mp.relation);
    const auto& e = edges[p];
    if (e.src.size() != e.dst.size()) throw Error("graph: ragged edge table " + mp.relation);
    if (mp.has_edge_attr) {
      if (e.attr.size() != e.size() * e.attr_dim || (e.size() > 0 && e.attr_dim == 0))
        throw Error("graph: edge attribute rows do not match edge count on " + mp.relation);
    } else if (!e.attr.empty()) {
      throw Error("graph: unexpected edge attributes on " + mp.relation);
    }
    const auto ns = node_count(mp.src);
    const auto nd = node_count(mp.dst);
    std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e.src[i] >= ns || e.dst[i] >= nd)
        throw Error("graph: edge endpoint out of range on " + mp.relation);
      if (!pairs.insert({e.src[i], e.dst[i]}).second)
        throw Error("graph: duplicate edge on " + mp.relation);
    }
  }
}

NeighborIndex neighbor_index(const EdgeTable& edges, std::size_t dst_count) {
  NeighborIndex idx;
  idx.degree.assign(dst_count, 0);
  for (auto d : edges.dst) {
    if (d >= dst_count) throw Error("neighbor_index: destination out of range");
    ++idx.degree[d];
  }
  idx.offsets.assign(dst_count + 1, 0);
  for (std::size_t i = 0; i < dst_count; ++i) idx.offsets[i + 1] = idx.offsets[i] + idx.degree[i];
  std::vector<std::uint32_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return std::pair(edges.dst[a], edges.src[a]) < std::pair(edges.dst[b], edges.src[b]);
  });
  idx.src.resize(edges.size());
  idx.edge_id.resize(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    idx.src[i] = edges.src[order[i]];
    idx.edge_id[i] = order[i];
  }
  return idx;
}

NeighborIndex neighbor_index(const HeteroImageGraph& g, const MetaPath& path) {
  const auto p = g.path_index(path);
  return neighbor_index(g.edges[p], g.node_count(path.dst));
}

HeteroImageGraph mask_dropout(const HeteroImageGraph& g, double p, Rng& rng) {
  if (p < 0 || p > 1) throw Error("mask_dropout: p must lie in [0, 1]");
  const auto mask_k = kind_index(NodeKind::kMask);
  const auto& table = g.nodes[mask_k];
  std::vector<long> remap(table.count, -1);
  HeteroImageGraph out = g;
  out.nodes[mask_k] = NodeTable{};
  for (std::size_t i = 0; i < table.count; ++i) {
    if (rng.bernoulli(p)) continue;
    remap[i] = static_cast<long>(out.nodes[mask_k].count++);
    out.nodes[mask_k].features.insert(out.nodes[mask_k].features.end(),
                                      table.features.begin() + i * g.feature_dim,
                                      table.features.begin() + (i + 1) * g.feature_dim);
  }
  for (std::size_t pi = 0; pi < g.schema.size(); ++pi) {
    const auto& mp = g.schema[pi];
    if (mp.src != NodeKind::kMask && mp.dst != NodeKind::kMask) continue;
    const auto& e = g.edges[pi];
    EdgeTable kept;
    kept.attr_dim = e.attr_dim;
    for (std::size_t i = 0; i < e.size(); ++i) {
      long s = e.src[i], d = e.dst[i];
      if (mp.src == NodeKind::kMask) s = remap[e.src[i]];
      if (mp.dst == NodeKind::kMask) d = remap[e.dst[i]];
      if (s < 0 || d < 0) continue;
      kept.src.push_back(static_cast<std::uint32_t>(s));
      kept.dst.push_back(static_cast<std::uint32_t>(d));
      if (mp.has_edge_attr)
        kept.attr.insert(kept.attr.end(), e.attr.begin() + i * e.attr_dim,
                         e.attr.begin() + (i + 1) * e.attr_dim);
    }
    out.edges[pi] = std::move(kept);
  }
  return out;
}

HeteroImageGraph disjoint_union(const std::vector<HeteroImageGraph>& graphs) {
  if (graphs.empty()) throw Error("disjoint_union: no graphs");
  const auto& first = graphs.front();
  HeteroImageGraph out;
  out.batch = 0;
  out.height = first.height;
  out.width = first.width;
  out.feature_dim = first.feature_dim;
  out.schema = first.schema;
  out.edges.resize(first.schema.size());
  for (std::size_t p = 0; p < first.schema.size(); ++p) out.edges[p].attr_dim = first.edges[p].attr_dim;
  const bool captions = !first.caption.empty();
  for (const auto& g : graphs) {
    if (g.schema != first.schema) throw Error("disjoint_union: schema mismatch");
    if (g.height != first.height || g.width != first.width)
      throw Error("disjoint_union: grid size mismatch");
    if (g.feature_dim != first.feature_dim) throw Error("disjoint_union: feature size mismatch");
    if (g.caption.empty() == captions)
      throw Error("disjoint_union: graphs disagree on caption presence");
    std::array<std::size_t, kNodeKindCount> offset{};
    for (std::size_t k = 0; k < kNodeKindCount; ++k)
      offset[k] = out.node_count(static_cast<NodeKind>(k));
    for (std::size_t p = 0; p < g.schema.size(); ++p) {
      const auto& mp = g.schema[p];
      const auto& e = g.edges[p];
      if (e.attr_dim != out.edges[p].attr_dim && e.size() > 0 && out.edges[p].size() > 0)
        throw Error("disjoint_union: edge attribute size mismatch");
      if (e.size() > 0) out.edges[p].attr_dim = e.attr_dim;
      auto& dst = out.edges[p];
      for (std::size_t i = 0; i < e.size(); ++i) {
        dst.src.push_back(static_cast<std::uint32_t>(e.src[i] + offset[kind_index(mp.src)]));
        dst.dst.push_back(static_cast<std::uint32_t>(e.dst[i] + offset[kind_index(mp.dst)]));
      }
      dst.attr.insert(dst.attr.end(), e.attr.begin(), e.attr.end());
    }
    for (std::size_t k = 1; k < kNodeKindCount; ++k) {
      out.nodes[k].count += g.nodes[k].count;
      out.nodes[k].features.insert(out.nodes[k].features.end(), g.nodes[k].features.begin(),
                                   g.nodes[k].features.end());
    }
    out.caption.insert(out.caption.end(), g.caption.begin(), g.caption.end());
    out.batch += g.batch;
  }
  return out;
}

}  // namespace hig::graph

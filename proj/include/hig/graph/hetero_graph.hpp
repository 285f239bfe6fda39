// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hig/core/random.hpp"
#include "hig/core/real.hpp"

namespace hig::graph {

enum class NodeKind : std::uint8_t { kImage = 0, kInstance = 1, kMask = 2, kClass = 3 };
inline constexpr std::size_t kNodeKindCount = 4;

const char* node_kind_name(NodeKind kind);
inline std::size_t kind_index(NodeKind kind) { return static_cast<std::size_t>(kind); }

// A typed relation src_kind --relation--> dst_kind. Edges are always directed.
struct MetaPath {
  NodeKind src = NodeKind::kInstance;
  std::string relation;
  NodeKind dst = NodeKind::kImage;
  bool has_edge_attr = false;

  bool operator==(const MetaPath&) const = default;
};

// Feature rows for one node kind; image nodes store no features.
struct NodeTable {
  std::size_t count = 0;
  std::vector<Real> features;  // count × feature_dim
  bool operator==(const NodeTable&) const = default;
};

struct EdgeTable {
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;
  std::vector<Real> attr;  // size() × attr_dim when the path has attributes
  std::size_t attr_dim = 0;

  std::size_t size() const { return src.size(); }
  bool operator==(const EdgeTable&) const = default;
};

// Typed conditioning graph tied to a batch of height × width image grids.
// Image node b*H*W + y*W + x is pixel (y, x) of batch element b.
struct HeteroImageGraph {
  std::size_t batch = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t feature_dim = 0;
  std::array<NodeTable, kNodeKindCount> nodes;
  std::vector<MetaPath> schema;
  std::vector<EdgeTable> edges;  // parallel to schema
  // Optional global caption embedding, batch × feature_dim (empty if absent).
  std::vector<Real> caption;

  std::size_t node_count(NodeKind kind) const;
  std::size_t conditioning_node_count() const;
  std::size_t path_index(const MetaPath& path) const;  // throws if absent
  // Throws hig::Error naming the first broken invariant.
  void validate() const;
  bool operator==(const HeteroImageGraph&) const = default;
};

// Incoming adjacency of one meta-path grouped by destination.
// Neighbours of dst i are src[offsets[i] .. offsets[i+1]), sorted ascending;
// edge_id maps each slot back to the edge table row.
struct NeighborIndex {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> edge_id;
  std::vector<std::uint32_t> degree;

  std::size_t dst_count() const { return degree.size(); }
};

NeighborIndex neighbor_index(const HeteroImageGraph& g, const MetaPath& path);
NeighborIndex neighbor_index(const EdgeTable& edges, std::size_t dst_count);

// Removes each mask node independently with probability p together with its
// incident edges; surviving mask nodes are renumbered in order.
HeteroImageGraph mask_dropout(const HeteroImageGraph& g, double p, Rng& rng);

// Batches graphs with identical schema, grid and feature sizes.
HeteroImageGraph disjoint_union(const std::vector<HeteroImageGraph>& graphs);

}  // namespace hig::graph

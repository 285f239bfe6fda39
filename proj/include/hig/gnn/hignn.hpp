// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "hig/gnn/hig_conv.hpp"
#include "hig/graph/hetero_graph.hpp"
#include "hig/model/params.hpp"

namespace hig::gnn {

struct HIGnnConfig {
  std::size_t blocks = 4;
  std::size_t channels = 32;        // hidden node width
  std::size_t image_channels = 32;  // width of the image map going in and out
  std::size_t feature_dim = 32;     // conditioning-node and edge-attribute width
  ConvOptions conv;
  // Count incoming paths per graph (non-empty edge tables only) instead of
  // per schema.
  bool per_graph_path_count = false;
  std::vector<graph::MetaPath> schema;
};

struct HIGBlockParams {
  std::vector<PathWeights> paths;  // parallel to the schema
};

struct HIGnnParams {
  DiffArray image_in;   // (channels, image_channels)
  DiffArray image_out;  // (image_channels, channels)
  std::array<DiffArray, graph::kNodeKindCount> kind_in;  // (channels, feature_dim); image slot unused
  std::vector<HIGBlockParams> blocks;

  static HIGnnParams init(const HIGnnConfig& cfg, Rng& rng);
  void collect(const std::string& prefix, const HIGnnConfig& cfg, model::NamedParams& out) const;
};

// Constant tensors derived from a graph once per forward. Stored features
// and edge attributes are unit-norm embeddings; they are scaled by
// sqrt(feature_dim) here so every entry has unit second moment.
struct GraphInputs {
  std::array<DiffArray, graph::kNodeKindCount> features;
  std::vector<DiffArray> edge_attr;  // undefined for plain paths
  std::vector<graph::NeighborIndex> index;
};

GraphInputs prepare_inputs(const graph::HeteroImageGraph& g);

// (B, C, H, W) -> (B*H*W, C') through the optional projection.
DiffArray image_to_nodes(const DiffArray& x_img, const DiffArray* proj, const ConvOptions& opt);
// (B*H*W, C) -> (B, C', H, W) through the optional projection.
DiffArray nodes_to_image(const DiffArray& nodes, const DiffArray* proj, std::size_t batch,
                         std::size_t height, std::size_t width, const ConvOptions& opt);

// RMS of every node kind after each block (NaN for empty kinds).
struct HIGnnTrace {
  std::vector<std::array<double, graph::kNodeKindCount>> block_rms;
};

// Image map -> conditioning map c_f of the same shape.
DiffArray hignn_forward(const graph::HeteroImageGraph& g, const GraphInputs& inputs,
                        const DiffArray& x_img, const HIGnnParams& params, const HIGnnConfig& cfg,
                        HIGnnTrace* trace = nullptr);

double rms(const DiffArray& x);

// Number of schema paths ending in each node kind.
std::array<std::size_t, graph::kNodeKindCount> incoming_path_counts(const std::vector<graph::MetaPath>& schema);

}  // namespace hig::gnn

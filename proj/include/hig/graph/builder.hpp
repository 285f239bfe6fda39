// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hig/graph/annotation.hpp"
#include "hig/graph/embedder.hpp"
#include "hig/graph/hetero_graph.hpp"

namespace hig::graph {

// Relation names of the standard schema.
inline constexpr const char* kCovers = "covers";          // instance -> image
inline constexpr const char* kLabels = "labels";          // mask -> image
inline constexpr const char* kIsA = "is_a";               // instance -> class
inline constexpr const char* kRelation = "relation";      // instance -> instance, attributed
inline constexpr const char* kAttribute = "attribute";    // instance self-loop, attributed
inline constexpr const char* kCoveredBy = "covered_by";   // image -> instance
inline constexpr const char* kLabeledBy = "labeled_by";   // image -> mask

struct GraphBuildConfig {
  bool reverse_paths = true;
  bool include_caption = true;
};

// Fixed path list so graphs built from different annotations batch together.
std::vector<MetaPath> standard_schema(const GraphBuildConfig& cfg);

// One instance node per object, one mask node per distinct mask class, one
// class node per distinct label. Repeated (src, dst) pairs within a path are
// merged; their edge attributes combine with normalized_sum.
HeteroImageGraph build_hig(const SceneAnnotation& ann, const LabelEmbedder& embedder,
                           const GraphBuildConfig& cfg = {});

}  // namespace hig::graph

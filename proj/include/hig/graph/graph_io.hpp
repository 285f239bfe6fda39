// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "hig/graph/hetero_graph.hpp"

namespace hig::graph {

// "HIG1" container: magic, u32 version, u64 batch/H/W/F, schema block
// {u32 count; per path u8 src, str relation, u8 dst, u8 attributed}, then
// per conditioning kind {u64 count; f64 features}, per path {u64 edges,
// u64 attr_dim, u32 src[], u32 dst[], f64 attr[]}, and {u64 n; f64 caption}.
inline constexpr std::uint32_t kGraphFileVersion = 1;

void save_graph(const HeteroImageGraph& g, const std::filesystem::path& path);
HeteroImageGraph load_graph(const std::filesystem::path& path);

}  // namespace hig::graph

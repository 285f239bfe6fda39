// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "hig/core/diff_array.hpp"

namespace hig::io {

// Named tensors in the "HGW1" container: magic, u32 version, u32 count, then
// per tensor {name, u32 rank, u64 dims..., f64 payload}. Little-endian.
using TensorMap = std::map<std::string, DiffArray>;

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const TensorMap& tensors, const std::filesystem::path& path);
// Loaded tensors are plain constants (no gradient tracking).
TensorMap load_checkpoint(const std::filesystem::path& path);

}  // namespace hig::io

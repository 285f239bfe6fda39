// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "hig/core/real.hpp"

namespace hig::graph {

// Deterministic text embedder standing in for a pretrained text encoder: the
// label hash seeds a Gaussian draw that is scaled to unit L2 norm. Distinct
// labels map to nearly orthogonal vectors.
class LabelEmbedder {
 public:
  explicit LabelEmbedder(std::size_t dim = 32, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}

  std::vector<Real> embed(std::string_view label) const;
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

}  // namespace hig::graph

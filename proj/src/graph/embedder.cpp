// SPDX-License-Identifier: Apache-2.0
#include "hig/graph/embedder.hpp"

#include <cmath>

#include "hig/core/random.hpp"

namespace hig::graph {

std::vector<Real> LabelEmbedder::embed(std::string_view label) const {
  if (label.empty()) throw Error("embed: empty label");
  if (dim_ == 0) throw Error("embed: zero embedding dimension");
  Rng rng(derive_seed(seed_, hash_string(label)));
  auto v = rng.normal_vector(dim_);
  Real sq = 0;
  for (Real x : v) sq += x * x;
  const Real inv = Real(1) / std::sqrt(sq);
  for (auto& x : v) x *= inv;
  return v;
}

}  // namespace hig::graph

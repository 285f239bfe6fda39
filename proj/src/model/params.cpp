// SPDX-License-Identifier: Apache-2.0
#include "hig/model/params.hpp"

#include <algorithm>
#include <cmath>

namespace hig::model {

DiffArray init_weight(Shape shape, Rng& rng) {
  const auto n = shape_numel(shape);
  return DiffArray::parameter(std::move(shape), rng.normal_vector(n));
}

io::TensorMap to_tensor_map(const NamedParams& params) {
  io::TensorMap out;
  for (const auto& [name, p] : params) {
    if (!out.emplace(name, p.detach()).second) throw Error("duplicate parameter name " + name);
  }
  return out;
}

void load_into(const NamedParams& params, const io::TensorMap& tensors, const std::string& source) {
  for (const auto& [name, p] : params) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(source + ": missing tensor " + name);
    if (it->second.shape() != p.shape())
      throw Error(source + ": tensor " + name + " has shape " + shape_string(it->second.shape()) +
                  ", expected " + shape_string(p.shape()));
    DiffArray handle = p;
    auto dst = handle.mutable_values();
    const auto src = it->second.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

double checksum(const NamedParams& params) {
  double s = 0;
  for (const auto& [name, p] : params)
    for (Real v : p.values()) s += static_cast<double>(v);
  return s;
}

void renormalize_rows(DiffArray& w) {
  if (w.ndim() < 2) return;
  const std::size_t rows = w.dim(0);
  const std::size_t fan_in = w.numel() / rows;
  auto v = w.mutable_values();
  const Real target = std::sqrt(static_cast<Real>(fan_in));
  for (std::size_t r = 0; r < rows; ++r) {
    Real sq = 0;
    for (std::size_t k = 0; k < fan_in; ++k) sq += v[r * fan_in + k] * v[r * fan_in + k];
    if (sq == 0) continue;
    const Real s = target / std::sqrt(sq);
    for (std::size_t k = 0; k < fan_in; ++k) v[r * fan_in + k] *= s;
  }
}

}  // namespace hig::model

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "hig/core/real.hpp"

namespace hig {

// Mixes a seed with a stream id so per-index generators are independent.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
// Stable 64-bit FNV-1a hash of a string.
std::uint64_t hash_string(std::string_view text);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Real normal() { return static_cast<Real>(normal_(engine_)); }
  Real uniform() { return static_cast<Real>(uniform_(engine_)); }
  // Uniform integer in [lo, hi].
  long uniform_int(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(engine_); }
  bool bernoulli(double p) { return uniform_(engine_) < p; }

  std::vector<Real> normal_vector(std::size_t n) {
    std::vector<Real> v(n);
    for (auto& x : v) x = normal();
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace hig

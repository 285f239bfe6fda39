// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hig/core/diff_array.hpp"
#include "hig/core/random.hpp"
#include "hig/io/checkpoint.hpp"

namespace hig::model {

// Ordered (name, handle) list. Handles share storage with the owning model,
// so writes through an entry update the model in place.
using NamedParams = std::vector<std::pair<std::string, DiffArray>>;

// Raw weight with N(0, 1) entries; forced normalisation makes its scale moot.
DiffArray init_weight(Shape shape, Rng& rng);

io::TensorMap to_tensor_map(const NamedParams& params);
// Copies values by name; every entry must be present with matching shape.
void load_into(const NamedParams& params, const io::TensorMap& tensors, const std::string& source);

// Sum of raw parameter values; a cheap change detector.
double checksum(const NamedParams& params);

// Rescales every row of a rank >= 2 weight to norm sqrt(fan_in).
void renormalize_rows(DiffArray& w);

}  // namespace hig::model

// SPDX-License-Identifier: Apache-2.0
#include "hig/io/checkpoint.hpp"

#include "hig/io/binary.hpp"

namespace hig::io {

void save_checkpoint(const TensorMap& tensors, const std::filesystem::path& path) {
  BinaryWriter w;
  w.magic("HGW1");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.ndim()));
    for (auto d : t.shape()) w.u64(d);
    w.f64_array(std::vector<Real>(t.values().begin(), t.values().end()));
  }
  w.save(path);
}

TensorMap load_checkpoint(const std::filesystem::path& path) {
  auto r = BinaryReader::from_file(path, path.string());
  if (!r.expect_magic("HGW1")) throw Error(path.string() + ": not a HGW1 checkpoint");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw Error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto count = r.u32();
  TensorMap out;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.str();
    const auto rank = r.u32();
    if (rank > 8) throw Error(path.string() + ": corrupt tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    auto values = r.f64_array(shape_numel(shape));
    out.emplace(std::move(name), DiffArray::constant(std::move(shape), std::move(values)));
  }
  if (!r.at_end()) throw Error(path.string() + ": trailing bytes after checkpoint");
  return out;
}

}  // namespace hig::io

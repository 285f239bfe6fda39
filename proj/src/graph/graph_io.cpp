// SPDX-License-Identifier: Apache-2.0
#include "hig/graph/graph_io.hpp"

#include "hig/io/binary.hpp"

namespace hig::graph {
namespace {

NodeKind read_kind(io::BinaryReader& r, const std::string& where) {
  const auto k = r.u8();
  if (k >= kNodeKindCount) throw Error(where + ": corrupt node kind");
  return static_cast<NodeKind>(k);
}

std::vector<std::uint32_t> read_indices(io::BinaryReader& r, std::size_t n, const std::string& where) {
  if (n > r.remaining() / 4) throw Error(where + ": truncated file");
  std::vector<std::uint32_t> v(n);
  for (auto& x : v) x = r.u32();
  return v;
}

}  // namespace

void save_graph(const HeteroImageGraph& g, const std::filesystem::path& path) {
  g.validate();
  io::BinaryWriter w;
  w.magic("HIG1");
  w.u32(kGraphFileVersion);
  w.u64(g.batch);
  w.u64(g.height);
  w.u64(g.width);
  w.u64(g.feature_dim);
  w.u32(static_cast<std::uint32_t>(g.schema.size()));
  for (const auto& p : g.schema) {
    w.u8(static_cast<std::uint8_t>(p.src));
    w.str(p.relation);
    w.u8(static_cast<std::uint8_t>(p.dst));
    w.u8(p.has_edge_attr ? 1 : 0);
  }
  for (std::size_t k = 1; k < kNodeKindCount; ++k) {
    w.u64(g.nodes[k].count);
    w.f64_array(g.nodes[k].features);
  }
  for (const auto& e : g.edges) {
    w.u64(e.size());
    w.u64(e.attr_dim);
    for (auto s : e.src) w.u32(s);
    for (auto d : e.dst) w.u32(d);
    w.u64(e.attr.size());
    w.f64_array(e.attr);
  }
  w.u64(g.caption.size());
  w.f64_array(g.caption);
  w.save(path);
}

HeteroImageGraph load_graph(const std::filesystem::path& path) {
  const auto where = path.string();
  auto r = io::BinaryReader::from_file(path, where);
  if (!r.expect_magic("HIG1")) throw Error(where + ": not a HIG file");
  const auto version = r.u32();
  if (version != kGraphFileVersion)
    throw Error(where + ": unsupported HIG version " + std::to_string(version));
  HeteroImageGraph g;
  g.batch = r.u64();
  g.height = r.u64();
  g.width = r.u64();
  g.feature_dim = r.u64();
  const auto paths = r.u32();
  if (paths > 1024) throw Error(where + ": corrupt schema");
  for (std::uint32_t i = 0; i < paths; ++i) {
    MetaPath p;
    p.src = read_kind(r, where);
    p.relation = r.str();
    p.dst = read_kind(r, where);
    p.has_edge_attr = r.u8() != 0;
    g.schema.push_back(std::move(p));
  }
  for (std::size_t k = 1; k < kNodeKindCount; ++k) {
    g.nodes[k].count = r.u64();
    if (g.feature_dim != 0 && g.nodes[k].count > r.remaining() / (8 * g.feature_dim))
      throw Error(where + ": truncated file");
    g.nodes[k].features = r.f64_array(g.nodes[k].count * g.feature_dim);
  }
  for (std::uint32_t i = 0; i < paths; ++i) {
    EdgeTable e;
    const auto n = r.u64();
    e.attr_dim = r.u64();
    e.src = read_indices(r, n, where);
    e.dst = read_indices(r, n, where);
    e.attr = r.f64_array(r.u64());
    g.edges.push_back(std::move(e));
  }
  g.caption = r.f64_array(r.u64());
  if (!r.at_end()) throw Error(where + ": trailing bytes after graph");
  g.validate();
  return g;
}

}  // namespace hig::graph

// SPDX-License-Identifier: Apache-2.0
#include "hig/graph/builder.hpp"

#include <cmath>
#include <map>
#include <utility>

namespace hig::graph {
namespace {

using EdgeKey = std::pair<std::uint32_t, std::uint32_t>;

// Accumulates edges of one path; duplicates collapse into a normalised sum.
struct PathBuilder {
  std::map<EdgeKey, std::vector<std::vector<Real>>> edges;

  void add(std::uint32_t src, std::uint32_t dst, std::vector<Real> attr = {}) {
    edges[{src, dst}].push_back(std::move(attr));
  }

  EdgeTable finish(std::size_t attr_dim) const {
    EdgeTable t;
    t.attr_dim = attr_dim;
    for (const auto& [key, attrs] : edges) {
      t.src.push_back(key.first);
      t.dst.push_back(key.second);
      if (attr_dim == 0) continue;
      const Real inv = Real(1) / std::sqrt(static_cast<Real>(attrs.size()));
      for (std::size_t k = 0; k < attr_dim; ++k) {
        Real s = 0;
        for (const auto& a : attrs) s += a[k];
        t.attr.push_back(attrs.size() == 1 ? s : s * inv);
      }
    }
    return t;
  }
};

void append(std::vector<Real>& dst, const std::vector<Real>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

std::vector<MetaPath> standard_schema(const GraphBuildConfig& cfg) {
  using K = NodeKind;
  std::vector<MetaPath> s = {
      {K::kInstance, kCovers, K::kImage, false},
      {K::kMask, kLabels, K::kImage, false},
      {K::kInstance, kIsA, K::kClass, false},
      {K::kInstance, kRelation, K::kInstance, true},
      {K::kInstance, kAttribute, K::kInstance, true},
  };
  if (cfg.reverse_paths) {
    s.push_back({K::kImage, kCoveredBy, K::kInstance, false});
    s.push_back({K::kImage, kLabeledBy, K::kMask, false});
  }
  return s;
}

HeteroImageGraph build_hig(const SceneAnnotation& ann, const LabelEmbedder& embedder,
                           const GraphBuildConfig& cfg) {
  ann.validate();
  const auto F = embedder.dim();
  HeteroImageGraph g;
  g.batch = 1;
  g.height = ann.height;
  g.width = ann.width;
  g.feature_dim = F;
  g.schema = standard_schema(cfg);

  PathBuilder covers, labels, is_a, relation, attribute;
  auto& inst = g.nodes[kind_index(NodeKind::kInstance)];
  auto& cls = g.nodes[kind_index(NodeKind::kClass)];
  auto& mask = g.nodes[kind_index(NodeKind::kMask)];

  std::map<std::string, std::uint32_t> class_id;
  for (std::size_t o = 0; o < ann.objects.size(); ++o) {
    const auto& obj = ann.objects[o];
    const auto node = static_cast<std::uint32_t>(o);
    append(inst.features, embedder.embed(obj.label));
    ++inst.count;
    for (int y = obj.bbox.y0; y < obj.bbox.y1; ++y)
      for (int x = obj.bbox.x0; x < obj.bbox.x1; ++x)
        covers.add(node, static_cast<std::uint32_t>(y * static_cast<int>(ann.width) + x));
    auto [it, fresh] = class_id.emplace(obj.label, static_cast<std::uint32_t>(cls.count));
    if (fresh) {
      append(cls.features, embedder.embed(obj.label));
      ++cls.count;
    }
    is_a.add(node, it->second);
    for (const auto& a : obj.attributes) attribute.add(node, node, embedder.embed(a));
  }
  for (const auto& r : ann.relationships)
    relation.add(static_cast<std::uint32_t>(r.subject_index),
                 static_cast<std::uint32_t>(r.object_index), embedder.embed(r.predicate));

  if (ann.mask) {
    std::map<int, std::uint32_t> mask_node;
    for (int id : *ann.mask) mask_node.emplace(id, 0);
    for (auto& [id, node] : mask_node) {
      node = static_cast<std::uint32_t>(mask.count++);
      append(mask.features, embedder.embed(ann.mask_labels.at(static_cast<std::size_t>(id))));
    }
    for (std::size_t p = 0; p < ann.mask->size(); ++p)
      labels.add(mask_node.at((*ann.mask)[p]), static_cast<std::uint32_t>(p));
  }

  auto reversed = [](const EdgeTable& t) {
    PathBuilder b;
    for (std::size_t i = 0; i < t.size(); ++i) b.add(t.dst[i], t.src[i]);
    return b.finish(0);
  };
  g.edges.resize(g.schema.size());
  g.edges[0] = covers.finish(0);
  g.edges[1] = labels.finish(0);
  g.edges[2] = is_a.finish(0);
  g.edges[3] = relation.finish(F);
  g.edges[4] = attribute.finish(F);
  if (cfg.reverse_paths) {
    g.edges[5] = reversed(g.edges[0]);
    g.edges[6] = reversed(g.edges[1]);
  }
  if (cfg.include_caption && ann.caption) g.caption = embedder.embed(*ann.caption);
  g.validate();
  return g;
}

}  // namespace hig::graph

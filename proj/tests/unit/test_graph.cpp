// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "hig/graph/builder.hpp"
#include "hig/graph/graph_io.hpp"

using namespace hig;
using namespace hig::graph;

namespace {

SceneAnnotation box_scene() {
  SceneAnnotation a;
  a.width = a.height = 4;
  a.objects.push_back({"red square", {0, 0, 2, 2}, {"red", "square"}});
  return a;
}

std::set<std::uint32_t> dsts(const EdgeTable& e) { return {e.dst.begin(), e.dst.end()}; }

const MetaPath kCoversPath{NodeKind::kInstance, kCovers, NodeKind::kImage, false};

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("embedder is deterministic and unit norm") {
    LabelEmbedder emb(32, 0);
    const auto a = emb.embed("cow"), b = emb.embed("cow");
    CHECK(a == b);
    double n = 0;
    for (Real v : a) n += v * v;
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("embeddings of distinct labels are nearly orthogonal") {
    LabelEmbedder emb(32, 0);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto a = emb.embed("a" + std::to_string(i)), b = emb.embed("b" + std::to_string(i));
      double dot = 0;
      for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
      worst = std::max(worst, std::abs(dot));
    }
    // Individual pairs may exceed 3/sqrt(F) rarely; the bulk may not.
    CHECK(worst < 6 / std::sqrt(32.0));
  }

  TEST_CASE("bounding box covers its pixels") {
    const auto g = build_hig(box_scene(), LabelEmbedder(8));
    const auto& e = g.edges[g.path_index(kCoversPath)];
    CHECK(e.size() == 4);
    CHECK(dsts(e) == std::set<std::uint32_t>{0, 1, 4, 5});
    const auto nbr = neighbor_index(g, kCoversPath);
    std::size_t total = 0;
    for (std::size_t i = 0; i < 16; ++i) {
      const bool inside = i == 0 || i == 1 || i == 4 || i == 5;
      CHECK(nbr.degree[i] == (inside ? 1u : 0u));
      total += nbr.degree[i];
    }
    CHECK(total == e.size());
  }

  TEST_CASE("full mask gives one mask edge per pixel") {
    auto a = box_scene();
    a.mask_labels = {"background", "grass", "sky"};
    a.mask = std::vector<int>(16);
    for (int i = 0; i < 16; ++i) (*a.mask)[static_cast<std::size_t>(i)] = i % 3;
    const auto g = build_hig(a, LabelEmbedder(8));
    CHECK(g.node_count(NodeKind::kMask) == 3);
    const auto& e = g.edges[g.path_index({NodeKind::kMask, kLabels, NodeKind::kImage, false})];
    CHECK(e.size() == 16);
    CHECK(dsts(e).size() == 16);
  }

  TEST_CASE("relationship edge carries the predicate embedding") {
    SceneAnnotation a = box_scene();
    a.objects.push_back({"horse", {1, 1, 3, 3}, {}});
    a.relationships.push_back({0, "pulling", 1});
    const LabelEmbedder emb(8);
    const auto g = build_hig(a, emb);
    const auto& e = g.edges[g.path_index({NodeKind::kInstance, kRelation, NodeKind::kInstance, true})];
    REQUIRE(e.size() == 1);
    CHECK(e.src[0] == 0);
    CHECK(e.dst[0] == 1);
    CHECK(e.attr == emb.embed("pulling"));
  }

  TEST_CASE("mask dropout extremes") {
    auto a = box_scene();
    a.mask_labels = {"background", "grass", "sky"};
    a.mask = std::vector<int>{0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
    const auto g = build_hig(a, LabelEmbedder(8));
    Rng rng(1);
    CHECK(mask_dropout(g, 0, rng) == g);
    const auto none = mask_dropout(g, 1, rng);
    CHECK(none.node_count(NodeKind::kMask) == 0);
    for (std::size_t p = 0; p < none.schema.size(); ++p)
      if (none.schema[p].src == NodeKind::kMask || none.schema[p].dst == NodeKind::kMask) CHECK(none.edges[p].size() == 0);
    none.validate();
  }

  TEST_CASE("disjoint union offsets indices and adds counts") {
    const LabelEmbedder emb(8);
    auto b = box_scene();
    b.objects.push_back({"tree", {2, 2, 4, 4}, {}});
    const auto g1 = build_hig(box_scene(), emb), g2 = build_hig(b, emb);
    CHECK(disjoint_union({g1}) == g1);
    const auto u = disjoint_union({g1, g2});
    CHECK(u.batch == 2);
    CHECK(u.node_count(NodeKind::kInstance) == 3);
    const auto p = g1.path_index(kCoversPath);
    CHECK(u.edges[p].size() == g1.edges[p].size() + g2.edges[p].size());
    for (std::size_t i = g1.edges[p].size(); i < u.edges[p].size(); ++i) {
      CHECK(u.edges[p].src[i] >= 1);
      CHECK(u.edges[p].dst[i] >= 16);
    }
  }

  TEST_CASE("empty edge table has zero degrees") {
    const auto nbr = neighbor_index(EdgeTable{}, 5);
    for (auto d : nbr.degree) CHECK(d == 0);
  }

  TEST_CASE("graph file round trip and corruption") {
    const auto dir = std::filesystem::temp_directory_path() / "hig_graph_test";
    std::filesystem::create_directories(dir);
    auto a = box_scene();
    a.caption = "a red square";
    const auto g = build_hig(a, LabelEmbedder(8));
    save_graph(g, dir / "g.hig");
    CHECK(load_graph(dir / "g.hig") == g);

    SceneAnnotation empty;
    empty.width = empty.height = 3;
    const auto e = build_hig(empty, LabelEmbedder(8));
    CHECK(e.conditioning_node_count() == 0);
    save_graph(e, dir / "e.hig");
    CHECK(load_graph(dir / "e.hig") == e);

    {
      std::fstream f(dir / "g.hig", std::ios::in | std::ios::out | std::ios::binary);
      f.put('X');
    }
    CHECK_THROWS_WITH_AS(load_graph(dir / "g.hig"), doctest::Contains("not a HIG file"), Error);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("validation rejects duplicate edges") {
    auto g = build_hig(box_scene(), LabelEmbedder(8));
    auto& e = g.edges[g.path_index(kCoversPath)];
    e.src.push_back(e.src[0]);
    e.dst.push_back(e.dst[0]);
    CHECK_THROWS_AS(g.validate(), Error);
  }
}

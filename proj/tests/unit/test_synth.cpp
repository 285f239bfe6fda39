// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <set>

#include "doctest.h"
#include "hig/synth/dataset.hpp"
#include "hig/synth/metrics.hpp"

using namespace hig;
using namespace hig::synth;
using doctest::Approx;

namespace {

std::size_t color_index(const std::string& name) {
  const auto& v = color_vocabulary();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i].name == name) return i;
  throw Error("no colour " + name);
}

io::Image blank(std::size_t n, Real v = 0) {
  io::Image im;
  im.height = im.width = n;
  im.data.assign(3 * n * n, v);
  return im;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("single red rectangle renders exactly") {
    Rng rng(1);
    const auto s = render_scene({{ShapeKind::kRectangle, color_index("red"), {0, 0, 2, 2}}}, 16, 16, rng);
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) {
        const bool in = x < 2 && y < 2;
        CHECK(s.image.at(0, y, x) == (in ? 1 : 0));
        CHECK(s.image.at(1, y, x) == 0);
        CHECK(s.image.at(2, y, x) == 0);
      }
  }

  TEST_CASE("front object wins the overlap and the mask agrees") {
    Rng rng(2);
    const auto s = render_scene({{ShapeKind::kRectangle, color_index("red"), {0, 0, 6, 6}},
                                 {ShapeKind::kRectangle, color_index("blue"), {3, 3, 9, 9}}},
                                16, 16, rng);
    CHECK(s.image.at(2, 4, 4) == 1);
    CHECK(s.image.at(0, 4, 4) == 0);
    bool front = false;
    for (const auto& r : s.annotation.relationships)
      front |= (r.predicate == kInFront && r.subject_index == 1 && r.object_index == 0) ||
               (r.predicate == kBehind && r.subject_index == 0 && r.object_index == 1);
    CHECK(front);
    const auto& mask = *s.annotation.mask;
    for (std::size_t p = 0; p < 256; ++p) {
      const auto y = p / 16, x = p % 16;
      const bool lit = s.image.at(0, y, x) + s.image.at(1, y, x) + s.image.at(2, y, x) > 0;
      CHECK((mask[p] != 0) == lit);
    }
  }

  TEST_CASE("generated scenes are valid and seed-determined") {
    SceneConfig cfg;
    cfg.seed = 5;
    for (std::size_t i = 0; i < 50; ++i) {
      const auto s = generate_indexed_scene(cfg, i);
      s.annotation.validate();
      std::set<std::size_t> colors;
      for (const auto& o : s.objects) colors.insert(o.color);
      CHECK(colors.size() == s.objects.size());
      CHECK(attribute_fidelity(s.image, s.annotation).fraction == 1.0);
      CHECK(relation_compliance(s.image, s.annotation).fraction() == 1.0);
    }
    CHECK(generate_indexed_scene(cfg, 3).image.data == generate_indexed_scene(cfg, 3).image.data);
  }

  TEST_CASE("fidelity oracles") {
    Rng rng(3);
    const auto s = render_scene({{ShapeKind::kRectangle, color_index("green"), {2, 2, 8, 8}},
                                 {ShapeKind::kEllipse, color_index("cyan"), {9, 9, 15, 15}}},
                                16, 16, rng);
    CHECK(attribute_fidelity(s.image, s.annotation).fraction == 1.0);
    // Every box filled with a wrong colour.
    auto wrong = s.image;
    for (const auto& o : s.objects) {
      const auto& rgb = color_vocabulary()[(o.color + 1) % 6].rgb;
      for (int y = o.bbox.y0; y < o.bbox.y1; ++y)
        for (int x = o.bbox.x0; x < o.bbox.x1; ++x)
          for (std::size_t c = 0; c < 3; ++c) wrong.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = rgb[c];
    }
    CHECK(attribute_fidelity(wrong, s.annotation).fraction == 0.0);
    // Mid grey: brute-force nearest colour decides which objects count as correct.
    const auto grey = blank(16, Real(0.5));
    std::size_t expect = 0;
    const std::size_t nearest = nearest_color({0.5, 0.5, 0.5});
    double best = 1e9;
    std::size_t brute = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      double d = 0;
      for (std::size_t c = 0; c < 3; ++c) d += (color_vocabulary()[i].rgb[c] - 0.5) * (color_vocabulary()[i].rgb[c] - 0.5);
      if (d < best - 1e-15) best = d, brute = i;
    }
    CHECK(nearest == brute);
    for (const auto& o : s.objects) expect += o.color == brute;
    CHECK(attribute_fidelity(grey, s.annotation).fraction == Approx(static_cast<double>(expect) / 2));
  }

  TEST_CASE("layout IoU oracles") {
    Rng rng(4);
    const auto s = render_scene({{ShapeKind::kRectangle, color_index("magenta"), {4, 4, 8, 8}}}, 16, 16, rng);
    CHECK(layout_iou(s.image, s.annotation) == 1.0);
    CHECK(layout_iou(blank(16), s.annotation) == 0.0);
    Rng rng2(4);
    const auto shifted = render_scene({{ShapeKind::kRectangle, color_index("magenta"), {5, 5, 9, 9}}}, 16, 16, rng2);
    CHECK(layout_iou(shifted.image, s.annotation) == Approx(9.0 / 23.0));
    CHECK(box_iou({4, 4, 8, 8}, {5, 5, 9, 9}) == Approx(9.0 / 23.0));
  }

  TEST_CASE("dataset files are reproducible") {
    namespace fs = std::filesystem;
    const auto root = fs::temp_directory_path() / "hig_synth_test";
    fs::remove_all(root);
    SceneConfig cfg;
    cfg.seed = 9;
    const auto a = generate_dataset(5, cfg, root / "a");
    const auto b = generate_dataset(5, cfg, root / "b");
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(a[i].png_sha256 == b[i].png_sha256);
      CHECK(a[i].raw_sha256 == b[i].raw_sha256);
      CHECK(a[i].annotation_sha256 == b[i].annotation_sha256);
    }
    CHECK(generate_dataset(0, cfg, root / "empty").empty());
    CHECK(load_dataset(root / "empty").empty());
    const auto loaded = load_dataset(root / "a");
    CHECK(loaded[2].image.data == generate_indexed_scene(cfg, 2).image.data);
    CHECK(loaded[2].annotation == generate_indexed_scene(cfg, 2).annotation);
    fs::remove_all(root);
  }
}

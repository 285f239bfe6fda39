// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "hig/core/nn_ops.hpp"
#include "hig/graph/builder.hpp"
#include "hig/model/params.hpp"
#include "hig/model/train.hpp"

using namespace hig;
using doctest::Approx;

namespace {

model::ModelConfig tiny(const graph::HeteroImageGraph& g) {
  auto cfg = model::ModelConfig::standard(g.schema, g.feature_dim);
  cfg.resolution = 8;
  cfg.channels = 8;
  cfg.blocks_per_stage = 1;
  cfg.fourier_dim = 8;
  cfg.emb_dim = 16;
  cfg.gnn.channels = cfg.gnn.image_channels = 8;
  cfg.gnn.blocks = 2;
  return cfg;
}

graph::HeteroImageGraph scene_graph(std::uint64_t seed) {
  Rng rng(seed);
  graph::SceneAnnotation a;
  a.width = a.height = 8;
  a.objects.push_back({"red square", {1, 1, 5, 4}, {"red", "square"}});
  a.objects.push_back({"blue disc", {3, 2, 8, 8}, {"blue", "disc"}});
  a.relationships.push_back({0, "in-front", 1});
  a.mask_labels = {"background", "red square", "blue disc"};
  a.mask = std::vector<int>(64);
  for (auto& m : *a.mask) m = static_cast<int>(rng.uniform_int(0, 2));
  return graph::build_hig(a, graph::LabelEmbedder(8));
}

bool same(const DiffArray& a, const DiffArray& b) {
  return a.numel() == b.numel() && std::memcmp(a.values().data(), b.values().data(), a.numel() * sizeof(Real)) == 0;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("preconditioning") {
    CHECK(model::precondition(Real(0.5), Real(0.5)).c_skip == Approx(0.5));
    const auto small = model::precondition(Real(1e-6), Real(0.5));
    CHECK(small.c_skip == Approx(1.0));
    CHECK(small.c_out == Approx(0.0).epsilon(1e-5));
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      const Real s = std::exp(rng.normal() * 2);
      const auto p = model::precondition(s, Real(0.5));
      CHECK(p.c_in * p.c_in * (s * s + Real(0.25)) == Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(model::precondition(0, Real(0.5)), Error);
    CHECK(model::loss_weight(Real(0.5), Real(0.5)) == Approx(2 / 0.25));
  }

  TEST_CASE("noise level distribution") {
    model::NoiseConfig cfg;
    Rng rng(2);
    std::vector<Real> s(100000);
    for (auto& v : s) v = model::sample_sigma(rng, cfg);
    CHECK(*std::min_element(s.begin(), s.end()) > 0);
    std::nth_element(s.begin(), s.begin() + 50000, s.end());
    CHECK(s[50000] == Approx(std::exp(-0.4)).epsilon(0.02));
  }

  TEST_CASE("learning-rate schedule") {
    CHECK(model::learning_rate(0, Real(0.01), 100) == Approx(0.01));
    CHECK(model::learning_rate(400, Real(0.01), 100) == Approx(0.005));
  }

  TEST_CASE("zero-gain control leaves the output untouched") {
    const auto g = scene_graph(3);
    model::Denoiser m(tiny(g), 1);
    Rng rng(5);
    const auto x = DiffArray::constant({1, 3, 8, 8}, rng.normal_vector(192));
    const auto base = m.denoise(x, {Real(1.3)});
    m.add_control(2);
    const auto cond = m.denoise(x, {Real(1.3)}, &g);
    const auto uncond = m.denoise(x, {Real(1.3)});
    graph::SceneAnnotation empty;
    empty.width = empty.height = 8;
    const auto eg = graph::build_hig(empty, graph::LabelEmbedder(8));
    const auto with_empty = m.denoise(x, {Real(1.3)}, &eg);
    CHECK(same(base, cond));
    CHECK(same(base, uncond));
    CHECK(same(base, with_empty));
  }

  TEST_CASE("output is finite across noise levels") {
    const auto g = scene_graph(4);
    model::Denoiser m(tiny(g), 1);
    m.add_control(2);
    Rng rng(6);
    const auto x = DiffArray::constant({3, 3, 8, 8}, rng.normal_vector(576));
    const auto u = graph::disjoint_union({g, g, g});
    const auto y = m.denoise(x, {Real(1e-3), 1, 80}, &u);
    for (Real v : y.values()) CHECK(std::isfinite(v));
  }

  TEST_CASE("graph without a control branch is rejected") {
    const auto g = scene_graph(4);
    model::Denoiser m(tiny(g), 1);
    const auto x = DiffArray::zeros({1, 3, 8, 8});
    CHECK_THROWS_AS(m.denoise(x, {1}, &g), Error);
  }

  TEST_CASE("loss is zero for a perfect denoiser and non-negative otherwise") {
    const auto x0 = DiffArray::constant({2, 2}, {1, 2, 3, 4});
    CHECK(nn::weighted_mse(x0, x0, {1, 1}).item() == 0);
    const auto g = scene_graph(7);
    model::Denoiser m(tiny(g), 1);
    Rng rng(8);
    const auto img = DiffArray::constant({2, 3, 8, 8}, rng.normal_vector(384));
    for (int i = 0; i < 5; ++i) CHECK(model::denoising_loss(m, img, nullptr, rng, {}).loss.item() >= 0);
  }

  TEST_CASE("control phase keeps the base frozen") {
    const auto g = scene_graph(9);
    auto cfg = tiny(g);
    model::Denoiser m(cfg, 1);
    model::TrainingSet set;
    set.height = set.width = 8;
    Rng rng(10);
    for (int i = 0; i < 4; ++i) {
      set.images.push_back(rng.normal_vector(192));
      set.graphs.push_back(scene_graph(11 + static_cast<std::uint64_t>(i)));
    }
    model::TrainConfig tc;
    tc.batch = 2;
    tc.steps = 3;
    model::train(m, set, tc, model::Phase::kBase);
    const double before = model::checksum(m.base_parameters());
    const auto snapshot = model::to_tensor_map(m.base_parameters());
    m.add_control(3);
    const double ctrl_before = model::checksum(m.control_parameters());
    const auto r = model::train(m, set, tc, model::Phase::kControl);
    CHECK(r.history.size() == 3);
    CHECK(model::checksum(m.base_parameters()) == before);
    for (const auto& [name, p] : m.base_parameters()) CHECK(same(p, snapshot.at(name)));
    CHECK(model::checksum(m.control_parameters()) != ctrl_before);
  }

  TEST_CASE("config keys round trip and reject unknown keys") {
    model::TrainConfig tc;
    tc.steps = 17;
    auto kv = model::train_keys(tc);
    model::TrainConfig back;
    model::apply_train_keys(back, kv);
    CHECK(kv.empty());
    CHECK(back.steps == 17);
    io::KeyValues bad{{"train.steps", "-3"}};
    CHECK_THROWS_AS(model::apply_train_keys(back, bad), Error);
  }
}

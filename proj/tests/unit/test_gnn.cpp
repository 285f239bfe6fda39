// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "hig/gnn/hignn.hpp"
#include "hig/core/nn_ops.hpp"
#include "hig/graph/builder.hpp"

using namespace hig;
using doctest::Approx;

namespace {

DiffArray identity(std::size_t n) {
  std::vector<Real> v(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1;
  return DiffArray::constant({n, n}, v);
}

}  // namespace

TEST_SUITE("gnn") {
  TEST_CASE("zero-degree node takes the residual path") {
    const auto x = DiffArray::constant({1, 2}, {1, 0});
    const auto nbr = graph::neighbor_index(graph::EdgeTable{}, 1);
    const auto out = gnn::hig_conv(x, x, nbr, nullptr, {identity(2), identity(2)}, {});
    CHECK(out.at(0) == Approx(1.2266).epsilon(1e-3));
    CHECK(out.at(1) == 0);
  }

  TEST_CASE("single neighbour update") {
    const auto xd = DiffArray::constant({1, 2}, {1, 0});
    const auto xs = DiffArray::constant({1, 2}, {0, 1});
    graph::EdgeTable e;
    e.src = {0};
    e.dst = {0};
    gnn::ConvOptions opt;
    opt.t_sum = Real(0.5);
    opt.weight_eps = 0;  // identity weights stay exact
    const auto out = gnn::hig_conv(xd, xs, graph::neighbor_index(e, 1), nullptr, {identity(2), identity(2)}, opt);
    const double expect = 0.70710678 / (1 + std::exp(-0.70710678)) / mp::silu_normalizer();
    CHECK(out.at(0) == Approx(expect));
    CHECK(out.at(1) == Approx(expect));
    CHECK(expect == Approx(0.79461).epsilon(1e-3));
  }

  TEST_CASE("identical neighbours grow as sqrt(N)") {
    for (std::uint32_t n : {1u, 4u, 16u}) {
      graph::EdgeTable e;
      for (std::uint32_t j = 0; j < n; ++j) e.src.push_back(j), e.dst.push_back(0);
      std::vector<Real> src(2 * n);
      for (std::uint32_t j = 0; j < n; ++j) src[2 * j] = 1;
      const auto xd = DiffArray::constant({1, 2}, {0, 0});
      gnn::ConvOptions opt;
      opt.t_sum = 1;  // isolates the aggregation term
      opt.weight_eps = 0;
      const auto out = gnn::hig_conv(xd, DiffArray::constant({n, 2}, src), graph::neighbor_index(e, 1), nullptr,
                                     {identity(2), identity(2)}, opt);
      const double s = std::sqrt(static_cast<double>(n));
      CHECK(out.at(0) == Approx(s / (1 + std::exp(-s)) / mp::silu_normalizer()));
    }
  }

  TEST_CASE("meta-path combination") {
    const auto u = DiffArray::constant({2}, {1, 2}), v = DiffArray::constant({2}, {3, -1});
    CHECK(gnn::combine_meta_paths({u}, 1).at(1) == 2);
    CHECK(gnn::combine_meta_paths({u, v}, 2).at(0) == Approx(4 / std::sqrt(2.0)));
    CHECK(gnn::combine_meta_paths({u, u, u}, 3).at(0) == Approx(std::sqrt(3.0)));
  }

  TEST_CASE("image and node layouts") {
    const auto x = DiffArray::constant({1, 1, 2, 2}, {1, 2, 3, 4});
    const auto nodes = gnn::image_to_nodes(x, nullptr, {});
    for (std::size_t i = 0; i < 4; ++i) CHECK(nodes.at(i) == static_cast<Real>(i + 1));
    const auto back = gnn::nodes_to_image(nodes, nullptr, 1, 2, 2, {});
    for (std::size_t i = 0; i < 4; ++i) CHECK(back.at(i) == x.at(i));
    const auto z = gnn::nodes_to_image(DiffArray::zeros({4, 1}), nullptr, 1, 2, 2, {});
    for (std::size_t i = 0; i < 4; ++i) CHECK(z.at(i) == 0);
  }

  TEST_CASE("projection preserves second moment") {
    Rng rng(3);
    const std::size_t C = 16, trials = 10000;
    const auto proj = DiffArray::constant({C, C}, rng.normal_vector(C * C));
    const auto x = DiffArray::constant({trials, C, 1, 1}, rng.normal_vector(trials * C));
    const auto nodes = gnn::image_to_nodes(x, &proj, {});
    CHECK(gnn::rms(nodes) * gnn::rms(nodes) == Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("forward is deterministic and handles empty graphs") {
    graph::SceneAnnotation a;
    a.width = a.height = 4;
    const auto g = graph::build_hig(a, graph::LabelEmbedder(8));
    gnn::HIGnnConfig cfg;
    cfg.channels = cfg.image_channels = 8;
    cfg.feature_dim = 8;
    cfg.blocks = 2;
    cfg.schema = g.schema;
    Rng rng(4);
    const auto params = gnn::HIGnnParams::init(cfg, rng);
    const auto inputs = gnn::prepare_inputs(g);
    const auto x = DiffArray::constant({1, 8, 4, 4}, rng.normal_vector(128));
    const auto y1 = gnn::hignn_forward(g, inputs, x, params, cfg);
    const auto y2 = gnn::hignn_forward(g, inputs, x, params, cfg);
    CHECK(std::memcmp(y1.values().data(), y2.values().data(), 128 * sizeof(Real)) == 0);

    // No conditioning nodes: every image-bound path reduces to mp_silu of its
    // self projection, and the paths combine as a normalized sum.
    auto h = gnn::image_to_nodes(x, &params.image_in, cfg.conv);
    for (const auto& b : params.blocks) {
      std::vector<DiffArray> outs;
      for (std::size_t p = 0; p < cfg.schema.size(); ++p)
        if (cfg.schema[p].dst == graph::NodeKind::kImage)
          outs.push_back(mp::mp_silu(nn::linear(h, mp::forced_weight_norm(b.paths[p].w1))));
      h = mp::normalized_sum(outs);
    }
    const auto expect = gnn::nodes_to_image(h, &params.image_out, 1, 4, 4, cfg.conv);
    for (std::size_t i = 0; i < 128; ++i) CHECK(y1.at(i) == Approx(expect.at(i)).epsilon(1e-12));
  }
}

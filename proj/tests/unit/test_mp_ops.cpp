// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "hig/core/mp_ops.hpp"
#include "hig/core/nn_ops.hpp"
#include "hig/core/random.hpp"

using namespace hig;
using doctest::Approx;

namespace {

DiffArray vec(std::vector<Real> v) {
  const auto n = v.size();
  return DiffArray::constant({n}, std::move(v));
}

double norm(const DiffArray& x) {
  double s = 0;
  for (Real v : x.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("mp_ops") {
  TEST_CASE("forced weight norm") {
    auto a = mp::forced_weight_norm(vec({3, 4}), 0);
    CHECK(a.at(0) == Approx(0.6).epsilon(1e-15));
    CHECK(a.at(1) == Approx(0.8).epsilon(1e-15));
    auto b = mp::forced_weight_norm(vec({3, 4}), Real(1e-4));
    CHECK(b.at(0) == Approx(0.599988).epsilon(1e-6));
    CHECK(b.at(1) == Approx(0.799984).epsilon(1e-6));
    // Row-wise on matrices.
    auto m = mp::forced_weight_norm(DiffArray::constant({2, 2}, {3, 4, 0, 2}), 0);
    CHECK(m.at(2) == 0);
    CHECK(m.at(3) == 1);
    CHECK_THROWS_AS(mp::forced_weight_norm(vec({0, 0}), 0), Error);
  }

  TEST_CASE("forced weight norm keeps raw weights untouched") {
    auto w = DiffArray::parameter({2, 3}, {1, 2, 3, 4, 5, 6});
    (void)mp::forced_weight_norm(w);
    CHECK(w.at(5) == 6);
  }

  TEST_CASE("mp_sum") {
    CHECK(mp::mp_sum(vec({1, 0}), vec({1, 0}), Real(0.5)).at(0) == Approx(std::sqrt(2.0)));
    const auto o = mp::mp_sum(vec({1, 0}), vec({0, 1}), Real(0.5));
    CHECK(norm(o) == Approx(1.0).epsilon(1e-15));
    CHECK(norm(mp::mp_sum(vec({1, 0}), vec({0, 0}), Real(0.3))) == Approx(0.7 / std::sqrt(0.58)));
  }

  TEST_CASE("mp_sum_gated is exact at zero gain") {
    const auto a = vec({0.1, -2, 3});
    const auto out = mp::mp_sum_gated(a, vec({5, 5, 5}), DiffArray::scalar(0), Real(0.3));
    for (std::size_t i = 0; i < 3; ++i) CHECK(out.at(i) == a.at(i));
  }

  TEST_CASE("mp_cat") {
    const auto same = mp::mp_cat(vec({1, 1}), vec({1, 1}), Real(0.5), 0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(same.at(i) == Approx(1.0).epsilon(1e-15));
    const auto c = mp::mp_cat(vec({1, 0}), vec({0, 0, 1}), Real(0.5), 0);
    CHECK(c.at(0) == Approx(1.11803).epsilon(1e-5));
    CHECK(c.at(4) == Approx(0.91287).epsilon(1e-5));
    const auto t0 = mp::mp_cat(vec({1, 0}), vec({7, 7, 7}), 0, 0);
    CHECK(t0.at(0) == Approx(std::sqrt(2.5)));
    CHECK(t0.at(2) == 0);
  }

  TEST_CASE("mp_silu") {
    CHECK(mp::silu_normalizer() == Approx(0.596).epsilon(1e-3 / 0.596));
    CHECK(mp::mp_silu(vec({0})).at(0) == 0);
    CHECK(mp::mp_silu(vec({1})).at(0) == Approx(0.731058578630 / mp::silu_normalizer()));
    auto x = DiffArray::parameter({1}, {0});
    backward(nn::sum(mp::mp_silu(x)));
    CHECK(x.grad()[0] == Approx(0.5 / mp::silu_normalizer()));
  }

  TEST_CASE("pixel_norm") {
    const auto p = mp::pixel_norm(vec({3, 4}), 0, 0);
    CHECK(p.at(0) == Approx(0.848528137));
    CHECK(p.at(1) == Approx(1.131370850));
    const auto z = mp::pixel_norm(vec({0, 0}), Real(1e-4), 0);
    CHECK(z.at(0) == 0);
  }

  TEST_CASE("normalized_sum") {
    const auto one = mp::normalized_sum({vec({0.3, 0.4})});
    CHECK(one.at(1) == Approx(0.4));
    const auto e1 = vec({1, 0});
    const auto four = mp::normalized_sum({e1, e1, e1, e1});
    CHECK(four.at(0) == Approx(2.0));
  }

  TEST_CASE("zero_gain") {
    const auto x = vec({1, -2});
    CHECK(mp::zero_gain(x, DiffArray::scalar(0)).at(1) == 0);
    CHECK(mp::zero_gain(x, DiffArray::scalar(1)).at(1) == -2);
    auto g = DiffArray::parameter({1}, {0});
    backward(nn::sum(mp::zero_gain(x, g)));
    CHECK(g.grad()[0] == Approx(-1.0));
  }

  TEST_CASE("mp_sum gradient is the blend weight") {
    auto a = DiffArray::parameter({2}, {1, 2});
    auto b = DiffArray::parameter({2}, {3, 4});
    backward(nn::sum(mp::mp_sum(a, b, Real(0.5))));
    CHECK(a.grad()[0] == Approx(0.5 / std::sqrt(0.5)));
    CHECK(b.grad()[1] == Approx(0.5 / std::sqrt(0.5)));
  }
}

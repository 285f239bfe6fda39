// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "hig/sampling/sampler.hpp"

using namespace hig;
using namespace hig::sampling;
using doctest::Approx;

TEST_SUITE("sampler") {
  TEST_CASE("noise schedule endpoints and order") {
    SamplerConfig cfg;
    const auto s = sigma_steps(cfg);
    REQUIRE(s.size() == 33);
    CHECK(s[0] == 80);
    CHECK(s[31] == Real(0.002));
    CHECK(s[32] == 0);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] < s[i - 1]);
  }

  TEST_CASE("auto-guidance identities") {
    CHECK(autoguided({1}, {0}, Real(1.8))[0] == Approx(1.8));
    const std::vector<Real> p = {0.1, 0.7, -3}, g = {0.3, 0.2, 1e-9};
    CHECK(autoguided(p, g, 1) == p);
    for (Real w : {Real(0), Real(1.8), Real(-2), Real(7)}) CHECK(autoguided(g, g, w) == g);
  }

  TEST_CASE("delta distribution is recovered") {
    const std::vector<Real> target = {0.25, -0.4, 0.1};
    const DenoiseFn d = [&](const std::vector<Real>&, Real) { return target; };
    SamplerConfig cfg;
    cfg.seed = 3;
    const auto x = sample(d, 3, cfg);
    for (std::size_t i = 0; i < 3; ++i) CHECK(x[i] == Approx(target[i]).epsilon(1e-2));
  }

  TEST_CASE("same seed gives identical samples") {
    const DenoiseFn d = [](const std::vector<Real>& x, Real s) {
      std::vector<Real> out(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / (1 + s * s);
      return out;
    };
    SamplerConfig cfg;
    cfg.seed = 7;
    CHECK(sample(d, 50, cfg) == sample(d, 50, cfg));
    auto other = cfg;
    other.seed = 8;
    CHECK(sample(d, 50, cfg) != sample(d, 50, other));
  }

  TEST_CASE("invalid configurations are rejected") {
    SamplerConfig cfg;
    cfg.steps = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.sigma_min = 100;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}

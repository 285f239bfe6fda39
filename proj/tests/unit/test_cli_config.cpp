// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>

#include "doctest.h"
#include "hig/cli/run_config.hpp"

using namespace hig;

TEST_SUITE("cli") {
  TEST_CASE("overrides beat the file, the file beats defaults") {
    const auto c = cli::resolve_config({{"train.steps", "10"}, {"train.batch", "4"}}, {{"train.steps", "20"}}, {});
    CHECK(c.train.steps == 20);
    CHECK(c.train.batch == 4);
    CHECK(c.train.alpha_ref == model::TrainConfig{}.alpha_ref);
  }

  TEST_CASE("unknown and malformed keys are usage errors") {
    CHECK_THROWS_AS(cli::resolve_config({}, {{"train.stepz", "1"}}, {}), cli::UsageError);
    CHECK_THROWS_AS(cli::resolve_config({}, {{"model.channels", "many"}}, {}), cli::UsageError);
    CHECK_THROWS_AS(cli::resolve_config({}, {{"gnn.variant", "fancy"}}, {}), cli::UsageError);
  }

  TEST_CASE("seed fills unset seed keys only") {
    const auto c = cli::resolve_config({}, {{"sampler.seed", "3"}}, 11);
    CHECK(c.scene.seed == 11);
    CHECK(c.train.seed == 11);
    CHECK(c.sampler.seed == 3);
  }

  TEST_CASE("seed falls back to the environment") {
    ::setenv("HIG_SEED", "42", 1);
    CHECK(cli::resolve_seed({}) == std::optional<std::uint64_t>(42));
    CHECK(cli::resolve_seed(5) == std::optional<std::uint64_t>(5));
    ::setenv("HIG_SEED", "x", 1);
    CHECK_THROWS_AS(cli::resolve_seed({}), cli::UsageError);
    ::unsetenv("HIG_SEED");
    CHECK_FALSE(cli::resolve_seed({}).has_value());
  }

  TEST_CASE("effective keys reproduce the configuration") {
    const auto c = cli::resolve_config({}, {{"gnn.blocks", "2"}, {"scene.max_objects", "2"}}, 9);
    const auto again = cli::resolve_config(c.keys(), {}, {});
    CHECK(again.keys() == c.keys());
    CHECK(again.model.gnn.blocks == 2);
  }
}

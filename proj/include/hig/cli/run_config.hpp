// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "hig/graph/builder.hpp"
#include "hig/io/kv_config.hpp"
#include "hig/model/train.hpp"
#include "hig/sampling/sampler.hpp"
#include "hig/synth/scene.hpp"

namespace hig::cli {

// Bad flags, unknown keys and malformed values; the CLI maps these to exit 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct GraphSettings {
  std::size_t feature_dim = 32;
  std::uint64_t embed_seed = 0;
  graph::GraphBuildConfig build;
};

// Every configurable key of one command.
struct RunConfig {
  synth::SceneConfig scene;
  GraphSettings graph;
  model::ModelConfig model;
  model::TrainConfig train;
  sampling::SamplerConfig sampler;

  graph::LabelEmbedder embedder() const { return graph::LabelEmbedder(graph.feature_dim, graph.embed_seed); }
  // Complete effective configuration, one entry per key.
  io::KeyValues keys() const;
};

// Precedence is overrides > file > defaults. Keys nobody consumes raise
// UsageError. A seed, when given, fills scene.seed, train.seed and
// sampler.seed unless those keys were set explicitly.
RunConfig resolve_config(const io::KeyValues& file, const io::KeyValues& overrides,
                         std::optional<std::uint64_t> seed);

// The --seed flag if present, else HIG_SEED, else nothing. A malformed
// HIG_SEED is a usage error.
std::optional<std::uint64_t> resolve_seed(std::optional<std::uint64_t> flag);

// `# hig <command>` followed by the effective keys; contains no timestamps
// so re-running from it reproduces byte-identical outputs.
void write_lockfile(const std::filesystem::path& path, const std::string& command, const RunConfig& cfg);

}  // namespace hig::cli

// SPDX-License-Identifier: Apache-2.0
#include "hig/cli/run_config.hpp"

#include <cstdlib>
#include <fstream>

namespace hig::cli {
namespace {

using io::format_real;
using io::take;

void apply_scene_keys(synth::SceneConfig& c, io::KeyValues& kv) {
  take(kv, "scene.height", c.height);
  take(kv, "scene.width", c.width);
  take(kv, "scene.min_objects", c.min_objects);
  take(kv, "scene.max_objects", c.max_objects);
  take(kv, "scene.min_size", c.min_size);
  take(kv, "scene.max_size", c.max_size);
  take(kv, "scene.overlap_probability", c.overlap_probability);
  take(kv, "scene.min_visible_fraction", c.min_visible_fraction);
  take(kv, "scene.max_retries", c.max_retries);
  take(kv, "scene.seed", c.seed);
}

void apply_graph_keys(GraphSettings& g, io::KeyValues& kv) {
  take(kv, "graph.feature_dim", g.feature_dim);
  take(kv, "graph.embed_seed", g.embed_seed);
  take(kv, "graph.reverse_paths", g.build.reverse_paths);
  take(kv, "graph.include_caption", g.build.include_caption);
  if (g.feature_dim == 0) throw UsageError("invalid config: graph.feature_dim must be positive");
}

void apply_sampler_keys(sampling::SamplerConfig& s, io::KeyValues& kv) {
  take(kv, "sampler.steps", s.steps);
  take(kv, "sampler.sigma_min", s.sigma_min);
  take(kv, "sampler.sigma_max", s.sigma_max);
  take(kv, "sampler.rho", s.rho);
  take(kv, "sampler.guidance", s.guidance);
  take(kv, "sampler.seed", s.seed);
}

io::KeyValues merged(const io::KeyValues& file, const io::KeyValues& overrides) {
  io::KeyValues kv = file;
  for (const auto& [k, v] : overrides) kv[k] = v;
  return kv;
}

}  // namespace

io::KeyValues RunConfig::keys() const {
  io::KeyValues kv = model::model_keys(model);
  kv.merge(model::train_keys(train));
  kv.insert({{"scene.height", std::to_string(scene.height)},
             {"scene.width", std::to_string(scene.width)},
             {"scene.min_objects", std::to_string(scene.min_objects)},
             {"scene.max_objects", std::to_string(scene.max_objects)},
             {"scene.min_size", std::to_string(scene.min_size)},
             {"scene.max_size", std::to_string(scene.max_size)},
             {"scene.overlap_probability", format_real(scene.overlap_probability)},
             {"scene.min_visible_fraction", format_real(scene.min_visible_fraction)},
             {"scene.max_retries", std::to_string(scene.max_retries)},
             {"scene.seed", std::to_string(scene.seed)},
             {"graph.feature_dim", std::to_string(graph.feature_dim)},
             {"graph.embed_seed", std::to_string(graph.embed_seed)},
             {"graph.reverse_paths", graph.build.reverse_paths ? "true" : "false"},
             {"graph.include_caption", graph.build.include_caption ? "true" : "false"},
             {"sampler.steps", std::to_string(sampler.steps)},
             {"sampler.sigma_min", format_real(sampler.sigma_min)},
             {"sampler.sigma_max", format_real(sampler.sigma_max)},
             {"sampler.rho", format_real(sampler.rho)},
             {"sampler.guidance", format_real(sampler.guidance)},
             {"sampler.seed", std::to_string(sampler.seed)}});
  return kv;
}

RunConfig resolve_config(const io::KeyValues& file, const io::KeyValues& overrides,
                         std::optional<std::uint64_t> seed) {
  auto kv = merged(file, overrides);
  RunConfig c;
  try {
    if (seed) {
      for (const char* k : {"scene.seed", "train.seed", "sampler.seed"})
        if (!kv.count(k)) kv[k] = std::to_string(*seed);
    }
    apply_scene_keys(c.scene, kv);
    apply_graph_keys(c.graph, kv);
    // The graph schema and feature width shape the model, so they come first.
    c.model = model::ModelConfig::standard(graph::standard_schema(c.graph.build), c.graph.feature_dim);
    c.model.resolution = c.scene.height;
    model::apply_model_keys(c.model, kv);
    model::apply_train_keys(c.train, kv);
    apply_sampler_keys(c.sampler, kv);
    c.sampler.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (!kv.empty()) throw UsageError("unknown config key '" + kv.begin()->first + "'");
  return c;
}

std::optional<std::uint64_t> resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return flag;
  const char* env = std::getenv("HIG_SEED");
  if (env == nullptr || *env == '\0') return std::nullopt;
  io::KeyValues kv{{"HIG_SEED", env}};
  std::uint64_t s = 0;
  try {
    take(kv, "HIG_SEED", s);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return s;
}

void write_lockfile(const std::filesystem::path& path, const std::string& command, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write lockfile " + path.string());
  out << "# hig " << command << '\n' << io::format_key_values(cfg.keys());
}

}  // namespace hig::cli

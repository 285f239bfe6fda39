// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hig/synth/scene.hpp"

namespace hig::synth {

// Scene i is drawn from its own stream derive_seed(cfg.seed, i).
Scene generate_indexed_scene(const SceneConfig& cfg, std::size_t index);

struct ManifestEntry {
  std::string stem;  // scene_00000
  std::string png_sha256, raw_sha256, annotation_sha256;
};

// Writes <stem>.png, <stem>.hgf (raw dump) and <stem>.json per scene plus
// manifest.json listing every file hash.
std::vector<ManifestEntry> generate_dataset(std::size_t n, const SceneConfig& cfg,
                                            const std::filesystem::path& out_dir);

struct LoadedScene {
  std::string stem;
  io::Image image;
  graph::SceneAnnotation annotation;
};

// Reads scenes listed in out_dir/manifest.json (raw dumps, not PNGs).
std::vector<LoadedScene> load_dataset(const std::filesystem::path& dir);

}  // namespace hig::synth

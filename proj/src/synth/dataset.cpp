// SPDX-License-Identifier: Apache-2.0
#include "hig/synth/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "hig/io/binary.hpp"
#include "json.hpp"

namespace hig::synth {
namespace {

std::string stem_for(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05zu", i);
  return buf;
}

}  // namespace

Scene generate_indexed_scene(const SceneConfig& cfg, std::size_t index) {
  Rng rng(derive_seed(cfg.seed, index));
  return generate_scene(rng, cfg);
}

std::vector<ManifestEntry> generate_dataset(std::size_t n, const SceneConfig& cfg,
                                            const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<ManifestEntry> entries;
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const auto scene = generate_indexed_scene(cfg, i);
    ManifestEntry e;
    e.stem = stem_for(i);
    const auto png = out_dir / (e.stem + ".png");
    const auto raw = out_dir / (e.stem + ".hgf");
    const auto ann = out_dir / (e.stem + ".json");
    io::write_png(scene.image, png);
    io::write_raw(scene.image, raw);
    graph::write_annotation(scene.annotation, ann);
    e.png_sha256 = io::sha256_file(png);
    e.raw_sha256 = io::sha256_file(raw);
    e.annotation_sha256 = io::sha256_file(ann);
    files.push_back({{"stem", e.stem},
                     {"png", {{"file", png.filename().string()}, {"sha256", e.png_sha256}}},
                     {"raw", {{"file", raw.filename().string()}, {"sha256", e.raw_sha256}}},
                     {"annotation", {{"file", ann.filename().string()}, {"sha256", e.annotation_sha256}}}});
    entries.push_back(std::move(e));
  }
  nlohmann::json manifest = {
      {"format", "hig-synth-1"},
      {"count", n},
      {"config",
       {{"height", cfg.height},
        {"width", cfg.width},
        {"min_objects", cfg.min_objects},
        {"max_objects", cfg.max_objects},
        {"min_size", cfg.min_size},
        {"max_size", cfg.max_size},
        {"overlap_probability", cfg.overlap_probability},
        {"min_visible_fraction", cfg.min_visible_fraction},
        {"seed", cfg.seed}}},
      {"files", files}};
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw Error("cannot write manifest in " + out_dir.string());
  out << manifest.dump(1) << '\n';
  return entries;
}

std::vector<LoadedScene> load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("no manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest.json: " + std::string(e.what()));
  }
  std::vector<LoadedScene> out;
  for (const auto& f : manifest.at("files")) {
    LoadedScene s;
    s.stem = f.at("stem").get<std::string>();
    s.image = io::read_raw(dir / f.at("raw").at("file").get<std::string>());
    s.annotation = graph::read_annotation(dir / f.at("annotation").at("file").get<std::string>());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hig::synth

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "hig/core/random.hpp"
#include "hig/graph/annotation.hpp"
#include "hig/io/image_io.hpp"

namespace hig::synth {

struct NamedColor {
  std::string name;
  std::array<Real, 3> rgb;
};

// Six saturated colours; every pair differs by 1 in at least one channel.
const std::vector<NamedColor>& color_vocabulary();
inline constexpr std::array<Real, 3> kBackground = {0, 0, 0};

enum class ShapeKind { kRectangle, kEllipse };
const char* shape_name(ShapeKind s);
std::optional<ShapeKind> parse_shape(const std::string& name);

inline constexpr const char* kLeftOf = "left-of";
inline constexpr const char* kAbove = "above";
inline constexpr const char* kInFront = "in-front";
inline constexpr const char* kBehind = "behind";

// Pixel-centre coverage of a shape inscribed in its half-open box.
bool shape_covers(ShapeKind shape, const graph::BBox& box, int x, int y);

struct SceneConfig {
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t min_objects = 1;
  std::size_t max_objects = 3;
  int min_size = 4;
  int max_size = 9;
  // Chance that a new object is placed overlapping an earlier one.
  Real overlap_probability = Real(0.5);
  // Every object keeps at least this fraction of its pixels visible.
  Real min_visible_fraction = Real(0.4);
  std::size_t max_retries = 1000;
  std::uint64_t seed = 0;
};

// Geometry source shared by the renderer, the mask and the annotation.
struct PlacedObject {
  ShapeKind shape;
  std::size_t color;  // index into color_vocabulary()
  graph::BBox bbox;
};

struct Scene {
  io::Image image;  // RGB in [0, 1]
  graph::SceneAnnotation annotation;
  std::vector<PlacedObject> objects;  // in draw order, back to front
};

// Renders objects back to front and derives mask, labels, relations and
// caption from the same geometry.
Scene render_scene(const std::vector<PlacedObject>& objects, std::size_t height, std::size_t width, Rng& rng);

Scene generate_scene(Rng& rng, const SceneConfig& cfg);

// Shape and colour of an annotated object, read from its attributes.
struct ObjectStyle {
  std::optional<ShapeKind> shape;
  std::optional<std::size_t> color;
};
ObjectStyle object_style(const graph::SceneObject& obj);

// rgb - 0.5 per channel; inverse of from_model_space.
std::vector<Real> to_model_space(const io::Image& image);
io::Image from_model_space(const std::vector<Real>& values, std::size_t channels, std::size_t height,
                           std::size_t width);

}  // namespace hig::synth

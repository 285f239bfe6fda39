// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hig::graph {

// Half-open integer box on the image grid: x0 <= x < x1, y0 <= y < y1.
struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  int area() const { return width() * height(); }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool operator==(const BBox&) const = default;
};

struct SceneObject {
  std::string label;
  BBox bbox;
  std::vector<std::string> attributes;
  bool operator==(const SceneObject&) const = default;
};

struct Relationship {
  std::size_t subject_index = 0;
  std::string predicate;
  std::size_t object_index = 0;
  bool operator==(const Relationship&) const = default;
};

// One conditioning record. `mask` holds one class id per pixel (row-major),
// and `mask_labels[id]` names that class.
struct SceneAnnotation {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<SceneObject> objects;
  std::optional<std::vector<int>> mask;
  std::vector<std::string> mask_labels;
  std::vector<Relationship> relationships;
  std::optional<std::string> caption;

  // Throws hig::Error on the first violated invariant.
  void validate() const;
  bool operator==(const SceneAnnotation&) const = default;
};

nlohmann::json to_json(const SceneAnnotation& ann);
SceneAnnotation annotation_from_json(const nlohmann::json& j);

void write_annotation(const SceneAnnotation& ann, const std::filesystem::path& path);
SceneAnnotation read_annotation(const std::filesystem::path& path);

}  // namespace hig::graph

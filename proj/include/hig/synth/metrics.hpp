// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "hig/graph/annotation.hpp"
#include "hig/io/image_io.hpp"

namespace hig::synth {

// Index into color_vocabulary() nearest to rgb (first on ties).
std::size_t nearest_color(const std::array<Real, 3>& rgb);

// Pixels of object `i` not hidden by an object the relations place in front.
std::vector<std::size_t> visible_pixels(const graph::SceneAnnotation& ann, std::size_t i);

struct FidelityReport {
  double fraction = 0;  // matched / counted (0 when nothing counted)
  std::size_t matched = 0;
  std::size_t counted = 0;
  std::vector<std::size_t> skipped;  // objects with no visible pixel
};

// Mean colour over each object's visible pixels, classified to the nearest
// vocabulary colour and compared with the object's colour attribute.
FidelityReport attribute_fidelity(const io::Image& image, const graph::SceneAnnotation& ann);

// Nearest-colour segmentation over {background} + vocabulary, 4-connected
// same-colour components, greedy bbox-IoU matching; mean best IoU per object.
double layout_iou(const io::Image& image, const graph::SceneAnnotation& ann);

struct RelationReport {
  std::size_t respected = 0;
  std::size_t pairs = 0;
  double fraction() const { return pairs == 0 ? 1.0 : static_cast<double>(respected) / static_cast<double>(pairs); }
};

// For every in-front/behind relation whose shapes overlap, checks that the
// part of their overlap not hidden by a third object shows the front
// object's colour.
RelationReport relation_compliance(const io::Image& image, const graph::SceneAnnotation& ann);

double box_iou(const graph::BBox& a, const graph::BBox& b);

}  // namespace hig::synth

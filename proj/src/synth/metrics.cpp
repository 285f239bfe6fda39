// SPDX-License-Identifier: Apache-2.0
#include "hig/synth/metrics.hpp"

#include <algorithm>
#include <limits>

#include "hig/synth/scene.hpp"

namespace hig::synth {
namespace {

std::array<Real, 3> pixel(const io::Image& img, std::size_t p) {
  const auto plane = img.height * img.width;
  return {img.data[p], img.data[plane + p], img.data[2 * plane + p]};
}

Real dist2(const std::array<Real, 3>& a, const std::array<Real, 3>& b) {
  Real s = 0;
  for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return s;
}

bool covers(const graph::SceneObject& obj, int x, int y) {
  const auto style = object_style(obj);
  return shape_covers(style.shape.value_or(ShapeKind::kRectangle), obj.bbox, x, y);
}

// Pairs (front, back) named by in-front/behind relations.
std::vector<std::pair<std::size_t, std::size_t>> occlusions(const graph::SceneAnnotation& ann) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& r : ann.relationships) {
    if (r.predicate == kInFront) out.emplace_back(r.subject_index, r.object_index);
    if (r.predicate == kBehind) out.emplace_back(r.object_index, r.subject_index);
  }
  return out;
}

void check_dims(const io::Image& img, const graph::SceneAnnotation& ann) {
  if (img.channels != 3 || img.height != ann.height || img.width != ann.width)
    throw Error("metrics: image and annotation dimensions differ");
}

}  // namespace

std::size_t nearest_color(const std::array<Real, 3>& rgb) {
  const auto& vocab = color_vocabulary();
  std::size_t best = 0;
  Real best_d = std::numeric_limits<Real>::infinity();
  for (std::size_t c = 0; c < vocab.size(); ++c) {
    const Real d = dist2(rgb, vocab[c].rgb);
    if (d < best_d) best_d = d, best = c;
  }
  return best;
}

std::vector<std::size_t> visible_pixels(const graph::SceneAnnotation& ann, std::size_t i) {
  std::vector<std::size_t> fronts;
  for (auto [front, back] : occlusions(ann))
    if (back == i) fronts.push_back(front);
  std::vector<std::size_t> out;
  const auto& obj = ann.objects[i];
  for (int y = obj.bbox.y0; y < obj.bbox.y1; ++y)
    for (int x = obj.bbox.x0; x < obj.bbox.x1; ++x) {
      if (!covers(obj, x, y)) continue;
      bool hidden = false;
      for (auto f : fronts) hidden = hidden || covers(ann.objects[f], x, y);
      if (!hidden) out.push_back(static_cast<std::size_t>(y) * ann.width + static_cast<std::size_t>(x));
    }
  return out;
}

FidelityReport attribute_fidelity(const io::Image& image, const graph::SceneAnnotation& ann) {
  check_dims(image, ann);
  FidelityReport r;
  for (std::size_t i = 0; i < ann.objects.size(); ++i) {
    const auto px = visible_pixels(ann, i);
    const auto style = object_style(ann.objects[i]);
    if (px.empty() || !style.color) {
      r.skipped.push_back(i);
      continue;
    }
    std::array<Real, 3> mean{};
    for (auto p : px) {
      const auto v = pixel(image, p);
      for (int c = 0; c < 3; ++c) mean[c] += v[c];
    }
    for (auto& m : mean) m /= static_cast<Real>(px.size());
    ++r.counted;
    if (nearest_color(mean) == *style.color) ++r.matched;
  }
  r.fraction = r.counted == 0 ? 0.0 : static_cast<double>(r.matched) / static_cast<double>(r.counted);
  return r;
}

double box_iou(const graph::BBox& a, const graph::BBox& b) {
  const int ix = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const int iy = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = static_cast<double>(ix) * iy;
  const double uni = static_cast<double>(a.area()) + b.area() - inter;
  return uni <= 0 ? 0.0 : inter / uni;
}

double layout_iou(const io::Image& image, const graph::SceneAnnotation& ann) {
  check_dims(image, ann);
  if (ann.objects.empty()) return 0.0;
  const auto H = ann.height, W = ann.width;
  const auto& vocab = color_vocabulary();
  // Label 0 is background, 1 + c is vocabulary colour c.
  std::vector<int> cls(H * W);
  for (std::size_t p = 0; p < H * W; ++p) {
    const auto v = pixel(image, p);
    Real best = dist2(v, kBackground);
    int label = 0;
    for (std::size_t c = 0; c < vocab.size(); ++c) {
      const Real d = dist2(v, vocab[c].rgb);
      if (d < best) best = d, label = static_cast<int>(c) + 1;
    }
    cls[p] = label;
  }
  std::vector<graph::BBox> comps;
  std::vector<char> seen(H * W, 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < H * W; ++start) {
    if (cls[start] == 0 || seen[start]) continue;
    graph::BBox box{static_cast<int>(W), static_cast<int>(H), 0, 0};
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(p % W), y = static_cast<int>(p / W);
      box = {std::min(box.x0, x), std::min(box.y0, y), std::max(box.x1, x + 1), std::max(box.y1, y + 1)};
      const std::size_t nb[4] = {x > 0 ? p - 1 : p, x + 1 < static_cast<int>(W) ? p + 1 : p,
                                 y > 0 ? p - W : p, y + 1 < static_cast<int>(H) ? p + W : p};
      for (auto q : nb)
        if (!seen[q] && cls[q] == cls[start]) {
          seen[q] = 1;
          stack.push_back(q);
        }
    }
    comps.push_back(box);
  }
  std::vector<char> used_obj(ann.objects.size(), 0), used_comp(comps.size(), 0);
  double total = 0;
  for (;;) {
    double best = 0;
    std::size_t bo = 0, bc = 0;
    for (std::size_t o = 0; o < ann.objects.size(); ++o)
      for (std::size_t c = 0; c < comps.size(); ++c) {
        if (used_obj[o] || used_comp[c]) continue;
        const double iou = box_iou(ann.objects[o].bbox, comps[c]);
        if (iou > best) best = iou, bo = o, bc = c;
      }
    if (best <= 0) break;
    used_obj[bo] = used_comp[bc] = 1;
    total += best;
  }
  return total / static_cast<double>(ann.objects.size());
}

RelationReport relation_compliance(const io::Image& image, const graph::SceneAnnotation& ann) {
  check_dims(image, ann);
  RelationReport r;
  for (auto [front, back] : occlusions(ann)) {
    const auto& f = ann.objects[front];
    const auto& b = ann.objects[back];
    const auto color = object_style(f).color;
    if (!color) continue;
    std::array<Real, 3> mean{};
    std::size_t n = 0;
    // Overlap pixels a third object hides are not evidence either way.
    for (const auto p : visible_pixels(ann, front)) {
      if (!covers(b, static_cast<int>(p % ann.width), static_cast<int>(p / ann.width))) continue;
      const auto v = pixel(image, p);
      for (int c = 0; c < 3; ++c) mean[c] += v[c];
      ++n;
    }
    if (n == 0) continue;
    for (auto& m : mean) m /= static_cast<Real>(n);
    ++r.pairs;
    if (nearest_color(mean) == *color) ++r.respected;
  }
  return r;
}

}  // namespace hig::synth

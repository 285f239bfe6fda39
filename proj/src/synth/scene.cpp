// SPDX-License-Identifier: Apache-2.0
#include "hig/synth/scene.hpp"

#include <algorithm>
#include <map>

namespace hig::synth {

const std::vector<NamedColor>& color_vocabulary() {
  static const std::vector<NamedColor> v = {
      {"red", {1, 0, 0}},    {"green", {0, 1, 0}}, {"blue", {0, 0, 1}},
      {"yellow", {1, 1, 0}}, {"cyan", {0, 1, 1}},  {"magenta", {1, 0, 1}},
  };
  return v;
}

const char* shape_name(ShapeKind s) { return s == ShapeKind::kRectangle ? "rectangle" : "ellipse"; }

std::optional<ShapeKind> parse_shape(const std::string& name) {
  if (name == "rectangle") return ShapeKind::kRectangle;
  if (name == "ellipse") return ShapeKind::kEllipse;
  return std::nullopt;
}

bool shape_covers(ShapeKind shape, const graph::BBox& box, int x, int y) {
  if (!box.contains(x, y)) return false;
  if (shape == ShapeKind::kRectangle) return true;
  const double rx = box.width() / 2.0, ry = box.height() / 2.0;
  const double dx = (x + 0.5 - (box.x0 + rx)) / rx;
  const double dy = (y + 0.5 - (box.y0 + ry)) / ry;
  return dx * dx + dy * dy <= 1.0;
}

ObjectStyle object_style(const graph::SceneObject& obj) {
  ObjectStyle s;
  const auto& vocab = color_vocabulary();
  for (const auto& a : obj.attributes) {
    if (auto shape = parse_shape(a)) s.shape = shape;
    for (std::size_t c = 0; c < vocab.size(); ++c)
      if (vocab[c].name == a) s.color = c;
  }
  return s;
}

namespace {

std::size_t overlap_pixels(const PlacedObject& a, const PlacedObject& b) {
  std::size_t n = 0;
  for (int y = std::max(a.bbox.y0, b.bbox.y0); y < std::min(a.bbox.y1, b.bbox.y1); ++y)
    for (int x = std::max(a.bbox.x0, b.bbox.x0); x < std::min(a.bbox.x1, b.bbox.x1); ++x)
      if (shape_covers(a.shape, a.bbox, x, y) && shape_covers(b.shape, b.bbox, x, y)) ++n;
  return n;
}

std::string label_of(const PlacedObject& o) {
  return color_vocabulary()[o.color].name + " " + shape_name(o.shape);
}

// Top-most object index per pixel, -1 for background.
std::vector<int> owner_map(const std::vector<PlacedObject>& objects, std::size_t h, std::size_t w) {
  std::vector<int> owner(h * w, -1);
  for (std::size_t i = 0; i < objects.size(); ++i)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        if (shape_covers(objects[i].shape, objects[i].bbox, static_cast<int>(x), static_cast<int>(y)))
          owner[y * w + x] = static_cast<int>(i);
  return owner;
}

}  // namespace

Scene render_scene(const std::vector<PlacedObject>& objects, std::size_t height, std::size_t width, Rng& rng) {
  Scene scene;
  scene.objects = objects;
  scene.image = io::Image{3, height, width, std::vector<Real>(3 * height * width)};
  const auto owner = owner_map(objects, height, width);
  const auto& vocab = color_vocabulary();

  auto& ann = scene.annotation;
  ann.width = width;
  ann.height = height;
  ann.mask_labels = {"background"};
  std::map<std::string, int> mask_id;
  std::vector<int> object_mask_id;
  for (const auto& o : objects) {
    const auto label = label_of(o);
    auto [it, fresh] = mask_id.emplace(label, static_cast<int>(ann.mask_labels.size()));
    if (fresh) ann.mask_labels.push_back(label);
    object_mask_id.push_back(it->second);
    ann.objects.push_back({label, o.bbox, {vocab[o.color].name, shape_name(o.shape)}});
  }
  std::vector<int> mask(height * width, 0);
  for (std::size_t p = 0; p < owner.size(); ++p) {
    const auto rgb = owner[p] < 0 ? kBackground : vocab[objects[owner[p]].color].rgb;
    for (std::size_t c = 0; c < 3; ++c) scene.image.data[c * height * width + p] = rgb[c];
    if (owner[p] >= 0) mask[p] = object_mask_id[owner[p]];
  }
  ann.mask = std::move(mask);

  std::string caption;
  for (std::size_t i = 0; i < objects.size(); ++i) caption += (i ? ", " : "") + label_of(objects[i]);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      const auto& a = objects[i].bbox;
      const auto& b = objects[j].bbox;
      graph::Relationship r;
      if (overlap_pixels(objects[i], objects[j]) > 0) {
        // j is drawn after i, so j occludes i.
        r = rng.bernoulli(0.5) ? graph::Relationship{j, kInFront, i} : graph::Relationship{i, kBehind, j};
      } else if (a.x1 <= b.x0) {
        r = {i, kLeftOf, j};
      } else if (b.x1 <= a.x0) {
        r = {j, kLeftOf, i};
      } else if (a.y1 <= b.y0) {
        r = {i, kAbove, j};
      } else if (b.y1 <= a.y0) {
        r = {j, kAbove, i};
      } else {
        continue;
      }
      ann.relationships.push_back(r);
      caption += "; " + label_of(objects[r.subject_index]) + " " + r.predicate + " " +
                 label_of(objects[r.object_index]);
    }
  }
  ann.caption = caption;
  ann.validate();
  return scene;
}

Scene generate_scene(Rng& rng, const SceneConfig& cfg) {
  if (cfg.min_objects < 1 || cfg.max_objects < cfg.min_objects) throw Error("scene: bad object count range");
  if (cfg.max_objects > color_vocabulary().size()) throw Error("scene: more objects than colours");
  if (cfg.min_size < 2 || cfg.max_size < cfg.min_size || cfg.max_size > static_cast<int>(std::min(cfg.height, cfg.width)))
    throw Error("scene: bad object size range");
  const auto H = static_cast<int>(cfg.height), W = static_cast<int>(cfg.width);
  const auto count = static_cast<std::size_t>(rng.uniform_int(static_cast<long>(cfg.min_objects),
                                                              static_cast<long>(cfg.max_objects)));
  std::vector<std::size_t> colors(color_vocabulary().size());
  for (std::size_t i = 0; i < colors.size(); ++i) colors[i] = i;
  std::shuffle(colors.begin(), colors.end(), rng.engine());

  std::vector<PlacedObject> placed;
  for (std::size_t retry = 0; placed.size() < count; ++retry) {
    if (retry >= cfg.max_retries) throw Error("scene: could not place objects within the retry budget");
    PlacedObject o;
    o.shape = rng.bernoulli(0.5) ? ShapeKind::kRectangle : ShapeKind::kEllipse;
    o.color = colors[placed.size()];
    const int w = static_cast<int>(rng.uniform_int(cfg.min_size, cfg.max_size));
    const int h = static_cast<int>(rng.uniform_int(cfg.min_size, cfg.max_size));
    const bool want_overlap = !placed.empty() && rng.bernoulli(cfg.overlap_probability);
    if (want_overlap) {
      const auto& t = placed[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(placed.size()) - 1))].bbox;
      const int x0 = static_cast<int>(rng.uniform_int(std::max(0, t.x0 - w + 2), std::min(W - w, t.x1 - 2)));
      const int y0 = static_cast<int>(rng.uniform_int(std::max(0, t.y0 - h + 2), std::min(H - h, t.y1 - 2)));
      o.bbox = {x0, y0, x0 + w, y0 + h};
    } else {
      const int x0 = static_cast<int>(rng.uniform_int(0, W - w));
      const int y0 = static_cast<int>(rng.uniform_int(0, H - h));
      o.bbox = {x0, y0, x0 + w, y0 + h};
    }
    auto trial = placed;
    trial.push_back(o);
    const auto owner = owner_map(trial, cfg.height, cfg.width);
    bool ok = true;
    for (std::size_t i = 0; i < trial.size() && ok; ++i) {
      std::size_t area = 0, visible = 0;
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          if (shape_covers(trial[i].shape, trial[i].bbox, x, y)) {
            ++area;
            if (owner[static_cast<std::size_t>(y * W + x)] == static_cast<int>(i)) ++visible;
          }
      ok = static_cast<Real>(visible) >= cfg.min_visible_fraction * static_cast<Real>(area);
    }
    if (ok) placed = std::move(trial);
  }
  return render_scene(placed, cfg.height, cfg.width, rng);
}

std::vector<Real> to_model_space(const io::Image& image) {
  std::vector<Real> v = image.data;
  for (auto& x : v) x -= Real(0.5);
  return v;
}

io::Image from_model_space(const std::vector<Real>& values, std::size_t channels, std::size_t height,
                           std::size_t width) {
  if (values.size() != channels * height * width) throw Error("from_model_space: size mismatch");
  io::Image img{channels, height, width, values};
  for (auto& x : img.data) x += Real(0.5);
  return img;
}

}  // namespace hig::synth

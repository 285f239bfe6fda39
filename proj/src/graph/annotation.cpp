// SPDX-License-Identifier: Apache-2.0
#include "hig/graph/annotation.hpp"

#include <fstream>
#include <set>

#include "hig/core/real.hpp"

namespace hig::graph {

void SceneAnnotation::validate() const {
  if (width == 0 || height == 0) throw Error("annotation: empty grid");
  const int w = static_cast<int>(width);
  const int h = static_cast<int>(height);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    const auto& b = o.bbox;
    if (o.label.empty()) throw Error("annotation: object " + std::to_string(i) + " has no label");
    if (!(0 <= b.x0 && b.x0 < b.x1 && b.x1 <= w && 0 <= b.y0 && b.y0 < b.y1 && b.y1 <= h))
      throw Error("annotation: object " + std::to_string(i) + " bbox outside the grid");
  }
  for (const auto& r : relationships) {
    if (r.subject_index >= objects.size() || r.object_index >= objects.size())
      throw Error("annotation: relationship index out of range");
    if (r.predicate.empty()) throw Error("annotation: empty relationship predicate");
  }
  if (mask) {
    if (mask->size() != width * height)
      throw Error("annotation: mask has " + std::to_string(mask->size()) + " entries for a " +
                  std::to_string(height) + "x" + std::to_string(width) + " grid");
    for (int v : *mask) {
      if (v < 0 || static_cast<std::size_t>(v) >= mask_labels.size())
        throw Error("annotation: mask class " + std::to_string(v) + " has no label");
    }
  }
}

nlohmann::json to_json(const SceneAnnotation& ann) {
  nlohmann::json j;
  j["width"] = ann.width;
  j["height"] = ann.height;
  j["objects"] = nlohmann::json::array();
  for (const auto& o : ann.objects) {
    j["objects"].push_back({{"label", o.label},
                            {"bbox", {o.bbox.x0, o.bbox.y0, o.bbox.x1, o.bbox.y1}},
                            {"attributes", o.attributes}});
  }
  j["mask"] = ann.mask ? nlohmann::json(*ann.mask) : nlohmann::json(nullptr);
  j["mask_labels"] = ann.mask_labels;
  j["relationships"] = nlohmann::json::array();
  for (const auto& r : ann.relationships) {
    j["relationships"].push_back({{"subject_index", r.subject_index},
                                  {"predicate", r.predicate},
                                  {"object_index", r.object_index}});
  }
  j["caption"] = ann.caption ? nlohmann::json(*ann.caption) : nlohmann::json(nullptr);
  return j;
}

SceneAnnotation annotation_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"width",     "height",        "objects", "mask",
                                           "mask_labels", "relationships", "caption"};
  try {
    for (const auto& [key, _] : j.items())
      if (!known.contains(key)) throw Error("annotation: unknown field '" + key + "'");
    SceneAnnotation ann;
    ann.width = j.at("width").get<std::size_t>();
    ann.height = j.at("height").get<std::size_t>();
    for (const auto& o : j.at("objects")) {
      SceneObject obj;
      obj.label = o.at("label").get<std::string>();
      const auto& b = o.at("bbox");
      if (b.size() != 4) throw Error("annotation: bbox needs 4 coordinates");
      obj.bbox = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
      if (o.contains("attributes")) obj.attributes = o["attributes"].get<std::vector<std::string>>();
      ann.objects.push_back(std::move(obj));
    }
    if (j.contains("mask") && !j["mask"].is_null()) ann.mask = j["mask"].get<std::vector<int>>();
    if (j.contains("mask_labels")) ann.mask_labels = j["mask_labels"].get<std::vector<std::string>>();
    if (j.contains("relationships")) {
      for (const auto& r : j["relationships"]) {
        ann.relationships.push_back({r.at("subject_index").get<std::size_t>(),
                                     r.at("predicate").get<std::string>(),
                                     r.at("object_index").get<std::size_t>()});
      }
    }
    if (j.contains("caption") && !j["caption"].is_null()) ann.caption = j["caption"].get<std::string>();
    ann.validate();
    return ann;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("annotation: malformed JSON: ") + e.what());
  }
}

void write_annotation(const SceneAnnotation& ann, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << to_json(ann).dump(1) << '\n';
}

SceneAnnotation read_annotation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return annotation_from_json(j);
}

}  // namespace hig::graph

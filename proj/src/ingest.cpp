#include "gcrn/ingest.hpp"

#include <algorithm>
#include <string>

#include "json.hpp"

namespace gcrn {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct ImageEntry {
  std::int64_t id = 0;
  double width = 0.0;
  double height = 0.0;
};

double number_field(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ValidationError(where + ": missing or non-numeric '" + key + "'");
  }
  return it->get<double>();
}

std::int64_t id_field(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    throw ValidationError(where + ": missing or non-integer '" + key + "'");
  }
  return it->get<std::int64_t>();
}

}  // namespace

CocoParseResult parse_coco_annotations(const std::string& bytes,
                                       const CocoParseOptions& options) {
  json root;
  try {
    root = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("annotation file: ") + e.what(), e.byte);
  } catch (const json::exception& e) {
    // e.g. number overflow, which nlohmann reports without a byte offset
    throw ParseError(std::string("annotation file: ") + e.what(), 0);
  }
  if (!root.is_object()) {
    throw ValidationError("annotation file: top level is not an object");
  }

  CocoParseResult result;

  std::map<std::int64_t, ImageEntry> images;
  if (root.contains("images")) {
    const json& arr = root.at("images");
    if (!arr.is_array()) throw ValidationError("'images' is not an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& img = arr[i];
      const std::string where = "images[" + std::to_string(i) + "]";
      if (!img.is_object()) throw ValidationError(where + ": not an object");
      ImageEntry entry;
      entry.id = id_field(img, "id", where);
      entry.width = number_field(img, "width", where);
      entry.height = number_field(img, "height", where);
      if (!(entry.width > 0.0) || !(entry.height > 0.0)) {
        throw ValidationError(where + ": non-positive image dimensions");
      }
      images[entry.id] = entry;
    }
  }

  std::vector<std::int64_t> category_ids;
  if (root.contains("categories")) {
    const json& arr = root.at("categories");
    if (!arr.is_array()) throw ValidationError("'categories' is not an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& cat = arr[i];
      const std::string where = "categories[" + std::to_string(i) + "]";
      if (!cat.is_object()) throw ValidationError(where + ": not an object");
      category_ids.push_back(id_field(cat, "id", where));
    }
  }
  std::sort(category_ids.begin(), category_ids.end());
  category_ids.erase(std::unique(category_ids.begin(), category_ids.end()),
                     category_ids.end());
  for (std::size_t i = 0; i < category_ids.size(); ++i) {
    result.category_remap[category_ids[i]] = static_cast<int>(i);
  }

  std::map<std::int64_t, std::vector<ObjectNode>> per_image;
  if (root.contains("annotations")) {
    const json& arr = root.at("annotations");
    if (!arr.is_array()) throw ValidationError("'annotations' is not an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& ann = arr[i];
      const std::string where = "annotations[" + std::to_string(i) + "]";
      if (!ann.is_object()) throw ValidationError(where + ": not an object");

      const std::int64_t image_id = id_field(ann, "image_id", where);
      const auto image_it = images.find(image_id);
      if (image_it == images.end()) {
        throw ReferentialError(where + ": image_id " + std::to_string(image_id) +
                               " does not exist");
      }
      const std::int64_t category_id = id_field(ann, "category_id", where);
      const auto remap_it = result.category_remap.find(category_id);
      if (remap_it == result.category_remap.end()) {
        throw ReferentialError(where + ": category_id " +
                               std::to_string(category_id) + " does not exist");
      }

      const auto bbox_it = ann.find("bbox");
      if (bbox_it == ann.end() || !bbox_it->is_array() || bbox_it->size() != 4 ||
          !std::all_of(bbox_it->begin(), bbox_it->end(),
                       [](const json& v) { return v.is_number(); })) {
        throw ValidationError(where + ": 'bbox' must be [x, y, w, h]");
      }
      const double x = (*bbox_it)[0].get<double>();
      const double y = (*bbox_it)[1].get<double>();
      const double w = (*bbox_it)[2].get<double>();
      const double h = (*bbox_it)[3].get<double>();

      const ImageEntry& image = image_it->second;
      const bool degenerate = !(w > 0.0) || !(h > 0.0);
      const bool out_of_bounds = x < 0.0 || y < 0.0 || x + w > image.width ||
                                 y + h > image.height;
      if (degenerate || out_of_bounds) {
        if (options.lenient) {
          ++result.skipped_annotations;
          continue;
        }
        throw ValidationError(where + (degenerate
                                           ? ": zero-area box"
                                           : ": box outside image bounds"));
      }

      ObjectNode node;
      node.box = {x, y, x + w, y + h};
      node.label = remap_it->second;
      per_image[image_id].push_back(std::move(node));
    }
  }

  for (auto& [image_id, nodes] : per_image) {
    const ImageEntry& image = images.at(image_id);
    result.scenes.push_back(build_scene_graph(std::move(nodes), image.width,
                                              image.height,
                                              EdgePolicy::fully_connected,
                                              image_id));
  }
  return result;
}

void attach_oracle_appearance(std::vector<SceneGraph>& scenes,
                              const WorldModel& world, Rng& rng) {
  for (SceneGraph& scene : scenes) {
    for (std::size_t i = 0; i < scene.size(); ++i) {
      ObjectNode& node = scene.nodes[i];
      if (!node.label.has_value()) {
        throw ValidationError("attach_oracle_appearance: scene " +
                              std::to_string(scene.id) + " node " +
                              std::to_string(i) + " has no label");
      }
      if (*node.label < 0 || *node.label >= world.num_classes) {
        throw ValidationError("attach_oracle_appearance: label " +
                              std::to_string(*node.label) +
                              " outside world vocabulary of " +
                              std::to_string(world.num_classes) + " classes");
      }
      node.appearance = sample_appearance(world, *node.label, rng);
    }
  }
}

CorruptResult corrupt_labels(const std::vector<SceneGraph>& scenes,
                             double flip_rate, int num_classes, Rng& rng) {
  if (flip_rate < 0.0 || flip_rate > 1.0) {
    throw ValidationError("corrupt_labels: flip_rate must lie in [0,1]");
  }
  if (num_classes < 2) {
    throw ValidationError("corrupt_labels: need at least 2 classes");
  }
  CorruptResult result;
  result.scenes = scenes;
  for (SceneGraph& scene : result.scenes) {
    for (std::size_t i = 0; i < scene.size(); ++i) {
      ObjectNode& node = scene.nodes[i];
      if (!node.label.has_value()) {
        throw ValidationError("corrupt_labels: unlabeled node");
      }
      if (rng.uniform() >= flip_rate) continue;
      const int original = *node.label;
      // Uniform over the other num_classes-1 labels.
      int replacement = static_cast<int>(
          rng.uniform_int(static_cast<std::uint64_t>(num_classes - 1)));
      if (replacement >= original) ++replacement;
      node.label = replacement;
      result.manifest.push_back(
          {scene.id, static_cast<int>(i), original, replacement});
    }
  }
  return result;
}

std::string flip_manifest_to_json(const std::vector<LabelFlip>& manifest) {
  ordered_json root;
  ordered_json flips = ordered_json::array();
  for (const LabelFlip& f : manifest) {
    flips.push_back({{"scene_id", f.scene_id},
                     {"node_index", f.node_index},
                     {"original_label", f.original_label},
                     {"replacement_label", f.replacement_label}});
  }
  root["flips"] = std::move(flips);
  return root.dump();
}

std::string remap_to_json(const std::map<std::int64_t, int>& remap) {
  ordered_json root;
  ordered_json entries = ordered_json::array();
  for (const auto& [original, dense] : remap) {
    entries.push_back({{"category_id", original}, {"label", dense}});
  }
  root["categories"] = std::move(entries);
  return root.dump();
}

}  // namespace gcrn

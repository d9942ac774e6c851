#include "gcrn/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gcrn/ooc.hpp"

namespace gcrn {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

ordered_json world_to_json_obj(const WorldModel& world) {
  ordered_json w;
  w["num_classes"] = world.num_classes;
  w["num_groups"] = world.num_groups;
  w["appearance_dim"] = world.appearance_dim;
  w["noise_scale"] = world.noise_scale;
  w["scene_size_range"] = world.scene_size_range;
  w["group_of_class"] = world.group_of_class;
  ordered_json stats = ordered_json::array();
  for (const ClassSizeStat& s : world.size_stats) {
    stats.push_back({{"mean_area", s.mean_area}, {"log_sd", s.log_sd}});
  }
  w["size_stats"] = std::move(stats);
  w["prototypes"] = world.prototypes;
  return w;
}

WorldModel world_from_json_obj(const json& w) {
  WorldModel world;
  world.num_classes = w.at("num_classes").get<int>();
  world.num_groups = w.at("num_groups").get<int>();
  world.appearance_dim = w.at("appearance_dim").get<int>();
  world.noise_scale = w.at("noise_scale").get<double>();
  world.scene_size_range = w.at("scene_size_range").get<std::array<int, 2>>();
  world.group_of_class = w.at("group_of_class").get<std::vector<int>>();
  for (const json& s : w.at("size_stats")) {
    world.size_stats.push_back(
        {s.at("mean_area").get<double>(), s.at("log_sd").get<double>()});
  }
  world.prototypes =
      w.at("prototypes").get<std::vector<std::vector<double>>>();
  world.validate();
  return world;
}

ordered_json scene_to_json_obj(const SceneGraph& scene) {
  ordered_json s;
  s["id"] = scene.id;
  s["width"] = scene.image_w;
  s["height"] = scene.image_h;
  ordered_json objects = ordered_json::array();
  for (const ObjectNode& node : scene.nodes) {
    ordered_json o;
    o["bbox"] = {node.box.xmin, node.box.ymin, node.box.xmax, node.box.ymax};
    if (node.label.has_value()) o["label"] = *node.label;
    o["appearance"] = node.appearance;
    o["is_ooc"] = node.is_ooc_truth;
    o["violation"] = violation_name(node.violation);
    objects.push_back(std::move(o));
  }
  s["objects"] = std::move(objects);
  return s;
}

SceneGraph scene_from_json_obj(const json& s) {
  std::vector<ObjectNode> nodes;
  for (const json& o : s.at("objects")) {
    ObjectNode node;
    const auto bbox = o.at("bbox").get<std::array<double, 4>>();
    node.box = {bbox[0], bbox[1], bbox[2], bbox[3]};
    if (o.contains("label")) node.label = o.at("label").get<int>();
    node.appearance = o.at("appearance").get<std::vector<double>>();
    node.is_ooc_truth = o.at("is_ooc").get<bool>();
    node.violation = violation_from_name(o.at("violation").get<std::string>());
    nodes.push_back(std::move(node));
  }
  return build_scene_graph(std::move(nodes), s.at("width").get<double>(),
                           s.at("height").get<double>(),
                           EdgePolicy::fully_connected,
                           s.at("id").get<std::int64_t>());
}

}  // namespace

namespace {

std::string scenes_to_json(const ordered_json& world_obj,
                           const std::vector<SceneGraph>& scenes) {
  ordered_json root;
  root["world"] = world_obj;
  ordered_json scene_array = ordered_json::array();
  for (const SceneGraph& scene : scenes) {
    scene_array.push_back(scene_to_json_obj(scene));
  }
  root["scenes"] = std::move(scene_array);
  return root.dump();
}

}  // namespace

std::string dataset_to_json(const WorldModel& world,
                            const std::vector<SceneGraph>& scenes) {
  return scenes_to_json(world_to_json_obj(world), scenes);
}

std::string dataset_to_json_worldless(const std::vector<SceneGraph>& scenes) {
  return scenes_to_json(ordered_json(), scenes);
}

ParsedDataset dataset_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("dataset: ") + e.what(), e.byte);
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset: ") + e.what(), 0);
  }
  try {
    ParsedDataset parsed;
    if (root.contains("world") && !root.at("world").is_null()) {
      parsed.world = world_from_json_obj(root.at("world"));
    }
    for (const json& s : root.at("scenes")) {
      parsed.scenes.push_back(scene_from_json_obj(s));
    }
    return parsed;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("dataset: ") + e.what());
  }
}

std::string manifest_to_json(const std::vector<Injection>& manifest) {
  ordered_json root;
  ordered_json injections = ordered_json::array();
  for (const Injection& inj : manifest) {
    ordered_json o;
    o["scene_id"] = inj.scene_id;
    o["node_index"] = inj.node_index;
    o["kind"] = violation_name(inj.kind);
    if (inj.kind == Violation::size) {
      o["scale_factor"] = inj.scale_factor;
    } else if (inj.kind == Violation::cooccurrence) {
      o["old_label"] = inj.old_label;
      o["new_label"] = inj.new_label;
    }
    injections.push_back(std::move(o));
  }
  root["injections"] = std::move(injections);
  return root.dump();
}

std::vector<Injection> manifest_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what(), e.byte);
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0);
  }
  try {
    std::vector<Injection> manifest;
    for (const json& o : root.at("injections")) {
      Injection inj;
      inj.scene_id = o.at("scene_id").get<std::int64_t>();
      inj.node_index = o.at("node_index").get<int>();
      inj.kind = violation_from_name(o.at("kind").get<std::string>());
      if (inj.kind == Violation::size) {
        inj.scale_factor = o.at("scale_factor").get<double>();
      } else if (inj.kind == Violation::cooccurrence) {
        inj.old_label = o.at("old_label").get<int>();
        inj.new_label = o.at("new_label").get<int>();
      }
      manifest.push_back(inj);
    }
    return manifest;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace gcrn

#include "gcrn/scene.hpp"

#include <cmath>
#include <string>

namespace gcrn {

namespace {

void validate_box(const BoundingBox& b, double image_w, double image_h,
                  std::size_t index) {
  const auto where = " (node " + std::to_string(index) + ")";
  if (!(b.xmin < b.xmax) || !(b.ymin < b.ymax)) {
    throw ValidationError("degenerate box: [" + std::to_string(b.xmin) + ", " +
                          std::to_string(b.ymin) + ", " +
                          std::to_string(b.xmax) + ", " +
                          std::to_string(b.ymax) + "]" + where);
  }
  if (b.xmin < 0.0 || b.ymin < 0.0 || b.xmax > image_w || b.ymax > image_h) {
    throw ValidationError("box outside image bounds" + where);
  }
}

}  // namespace

SceneGraph build_scene_graph(std::vector<ObjectNode> objects, double image_w,
                             double image_h, EdgePolicy policy,
                             std::int64_t id) {
  if (objects.empty()) throw ValidationError("empty scene: no objects");
  if (!(image_w > 0.0) || !(image_h > 0.0)) {
    throw ValidationError("image dimensions must be positive");
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    validate_box(objects[i].box, image_w, image_h, i);
  }

  const std::size_t n = objects.size();
  Matrix a_plus_i(n, n);
  switch (policy) {
    case EdgePolicy::fully_connected:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a_plus_i(i, j) = 1.0;
      break;
  }

  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a_plus_i(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);  // self-loop keeps deg >= 1
  }

  SceneGraph g;
  g.id = id;
  g.nodes = std::move(objects);
  g.image_w = image_w;
  g.image_h = image_h;
  g.adjacency_norm = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      g.adjacency_norm(i, j) = inv_sqrt_deg[i] * a_plus_i(i, j) * inv_sqrt_deg[j];
  return g;
}

std::array<double, 7> spatial_features(const BoundingBox& box, double image_w,
                                       double image_h) {
  if (!(image_w > 0.0) || !(image_h > 0.0)) {
    throw ValidationError("spatial_features: image dimensions must be positive");
  }
  const double area_image = image_w * image_h;
  return {box.width() / image_w, box.height() / image_h,
          box.area() / area_image, box.xmin / image_w,
          box.ymin / image_h,      box.xmax / image_w,
          box.ymax / image_h};
}

namespace {

void append_geometry(std::vector<double>& out, const ObjectNode& node,
                     double image_w, double image_h) {
  out.push_back(node.box.xmin);
  out.push_back(node.box.ymin);
  out.push_back(node.box.xmax);
  out.push_back(node.box.ymax);
  const auto sp = spatial_features(node.box, image_w, image_h);
  out.insert(out.end(), sp.begin(), sp.end());
}

}  // namespace

std::vector<double> node_input_repg(const ObjectNode& node, double image_w,
                                    double image_h) {
  if (node.appearance.empty()) {
    throw ValidationError("node_input_repg: node has no appearance features");
  }
  std::vector<double> out = node.appearance;
  out.reserve(out.size() + 11);
  append_geometry(out, node, image_w, image_h);
  return out;
}

std::vector<double> node_input_cong(const ObjectNode& node,
                                    std::optional<int> assumed_label,
                                    int num_classes, double image_w,
                                    double image_h) {
  std::vector<double> out(static_cast<std::size_t>(num_classes), 0.0);
  if (assumed_label.has_value()) {
    const int label = *assumed_label;
    if (label < 0 || label >= num_classes) {
      throw IndexError("node_input_cong: label " + std::to_string(label) +
                       " out of range [0, " + std::to_string(num_classes) + ")");
    }
    out[static_cast<std::size_t>(label)] = 1.0;
  }
  out.reserve(out.size() + 11);
  append_geometry(out, node, image_w, image_h);
  return out;
}

Matrix repg_inputs(const SceneGraph& scene) {
  const std::size_t n = scene.size();
  std::vector<double> first = node_input_repg(scene.nodes[0], scene.image_w,
                                              scene.image_h);
  Matrix x(n, first.size());
  std::copy(first.begin(), first.end(), x.row_ptr(0));
  for (std::size_t i = 1; i < n; ++i) {
    const auto row = node_input_repg(scene.nodes[i], scene.image_w,
                                     scene.image_h);
    if (row.size() != x.cols) {
      throw ShapeError("repg_inputs: inconsistent appearance dimension at node " +
                       std::to_string(i));
    }
    std::copy(row.begin(), row.end(), x.row_ptr(i));
  }
  return x;
}

Matrix cong_inputs(const SceneGraph& scene,
                   const std::vector<int>& assumed_labels, int num_classes,
                   std::optional<std::size_t> masked_node) {
  const std::size_t n = scene.size();
  if (assumed_labels.size() != n) {
    throw ShapeError("cong_inputs: " + std::to_string(assumed_labels.size()) +
                     " labels for " + std::to_string(n) + " nodes");
  }
  Matrix x(n, static_cast<std::size_t>(num_classes) + 11);
  for (std::size_t i = 0; i < n; ++i) {
    const std::optional<int> label =
        (masked_node && *masked_node == i) ? std::nullopt
                                           : std::optional<int>(assumed_labels[i]);
    const auto row = node_input_cong(scene.nodes[i], label, num_classes,
                                     scene.image_w, scene.image_h);
    std::copy(row.begin(), row.end(), x.row_ptr(i));
  }
  return x;
}

std::vector<int> true_labels(const SceneGraph& scene) {
  std::vector<int> labels;
  labels.reserve(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (!scene.nodes[i].label.has_value()) {
      throw ValidationError("scene " + std::to_string(scene.id) + ": node " +
                            std::to_string(i) + " has no label");
    }
    labels.push_back(*scene.nodes[i].label);
  }
  return labels;
}

}  // namespace gcrn

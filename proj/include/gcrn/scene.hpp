#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "gcrn/matrix.hpp"

namespace gcrn {

struct BoundingBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
};

enum class Violation { none, cooccurrence, size };

struct ObjectNode {
  BoundingBox box;
  std::optional<int> label;        // class index; absent for unlabeled input
  std::vector<double> appearance;  // empty until features are attached
  bool is_ooc_truth = false;       // ground truth, evaluation only
  Violation violation = Violation::none;
};

enum class EdgePolicy { fully_connected };

/// One image's objects plus the normalized adjacency
/// D^{-1/2}(A+I)D^{-1/2} for the chosen edge set.
struct SceneGraph {
  std::int64_t id = 0;
  std::vector<ObjectNode> nodes;
  double image_w = 1.0;
  double image_h = 1.0;
  Matrix adjacency_norm;

  std::size_t size() const { return nodes.size(); }
};

/// Validates boxes against the image bounds and precomputes the normalized
/// adjacency. Throws ValidationError on an empty object list or a
/// degenerate/out-of-bounds box.
SceneGraph build_scene_graph(std::vector<ObjectNode> objects, double image_w,
                             double image_h,
                             EdgePolicy policy = EdgePolicy::fully_connected,
                             std::int64_t id = 0);

/// [w/W, h/H, a/A, xmin/W, ymin/H, xmax/W, ymax/H]; every component in [0,1]
/// for a valid in-bounds box.
std::array<double, 7> spatial_features(const BoundingBox& box, double image_w,
                                       double image_h);

/// RepG node input: [appearance | xmin,ymin,xmax,ymax | 7 spatial].
std::vector<double> node_input_repg(const ObjectNode& node, double image_w,
                                    double image_h);

/// ConG node input: [onehot(assumed_label) | xmin,ymin,xmax,ymax | 7 spatial].
/// nullopt leaves the one-hot slot all-zero (the masked form used when the
/// node is the prediction target). Carries no appearance information.
std::vector<double> node_input_cong(const ObjectNode& node,
                                    std::optional<int> assumed_label,
                                    int num_classes, double image_w,
                                    double image_h);

/// All RepG node inputs for a scene, one row per node.
Matrix repg_inputs(const SceneGraph& scene);

/// All ConG node inputs for a scene given per-node assumed labels, with
/// masked_node's one-hot slot zeroed (pass nullopt to mask nothing).
Matrix cong_inputs(const SceneGraph& scene,
                   const std::vector<int>& assumed_labels, int num_classes,
                   std::optional<std::size_t> masked_node);

/// Ground-truth labels of every node; throws ValidationError if any node is
/// unlabeled.
std::vector<int> true_labels(const SceneGraph& scene);

}  // namespace gcrn

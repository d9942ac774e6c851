#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gcrn/rng.hpp"
#include "gcrn/scene.hpp"

namespace gcrn {

struct ClassSizeStat {
  double mean_area = 0.05;  // fraction of the unit image
  double log_sd = 0.25;
};

/// Synthetic universe: classes partitioned into co-occurrence groups, each
/// class with its own box-size statistics and appearance prototype. Scenes
/// are drawn in the unit square.
struct WorldModel {
  int num_classes = 0;
  int num_groups = 0;
  int appearance_dim = 0;
  std::vector<int> group_of_class;           // size num_classes
  std::vector<ClassSizeStat> size_stats;     // size num_classes
  std::vector<std::vector<double>> prototypes;  // unit-norm, per class
  double noise_scale = 0.15;
  std::array<int, 2> scene_size_range = {3, 8};

  std::vector<int> classes_in_group(int group) const;
  void validate() const;
};

struct GenConfig {
  std::uint64_t seed = 0;
  int num_train_scenes = 0;
  int num_test_scenes = 0;
  double ooc_fraction = 0.5;  // fraction of test scenes given one OOC node
  double cooccurrence_weight = 0.68;
  double size_weight = 0.32;
  std::array<double, 2> size_scale_range = {2.0, 5.0};
};

WorldModel generate_world(int num_classes, int num_groups, int appearance_dim,
                          std::uint64_t seed);

/// Draws appearance for a class: prototype + noise_scale * N(0, I).
std::vector<double> sample_appearance(const WorldModel& world, int label,
                                      Rng& rng);

/// All nodes drawn from a single co-occurrence group; boxes inside the unit
/// square with areas clamped to [mean/3, mean*3] of the class statistic.
SceneGraph generate_scene(const WorldModel& world, Rng& rng,
                          std::int64_t scene_id = 0);

struct Injection {
  std::int64_t scene_id = 0;
  int node_index = 0;
  Violation kind = Violation::none;
  double scale_factor = 0.0;  // size violations
  int old_label = -1;         // co-occurrence violations
  int new_label = -1;
};

/// Replaces one node's class with a class from a different group and redraws
/// its appearance; the box is untouched. Requires >= 2 groups.
std::pair<SceneGraph, Injection> inject_cooccurrence_ooc(const SceneGraph& scene,
                                                         const WorldModel& world,
                                                         Rng& rng);

/// Scales one node's box about its center by a factor drawn uniformly from
/// scale_range, clipping to the unit square; class and appearance untouched.
std::pair<SceneGraph, Injection> inject_size_ooc(
    const SceneGraph& scene, const WorldModel& world, Rng& rng,
    std::array<double, 2> scale_range = {2.0, 5.0});

struct Dataset {
  WorldModel world;
  std::vector<SceneGraph> train;  // all in-context
  std::vector<SceneGraph> test;   // mixed, per GenConfig
  std::vector<Injection> manifest;
};

/// Deterministic in (world, config): every scene draws from its own RNG
/// stream derived from (seed, scene index).
Dataset generate_dataset(const WorldModel& world, const GenConfig& config);

}  // namespace gcrn

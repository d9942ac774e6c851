#include "gcrn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gcrn {

namespace {

// RNG stream tags so train scenes, test scenes and injection choices never
// share a stream.
constexpr std::uint64_t kStreamTrain = 1;
constexpr std::uint64_t kStreamTest = 2;
constexpr std::uint64_t kStreamInject = 3;
constexpr std::uint64_t kStreamSelect = 4;

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

std::vector<double> random_unit_vector(int dim, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

std::vector<int> WorldModel::classes_in_group(int group) const {
  std::vector<int> classes;
  for (int c = 0; c < num_classes; ++c) {
    if (group_of_class[static_cast<std::size_t>(c)] == group) classes.push_back(c);
  }
  return classes;
}

void WorldModel::validate() const {
  if (num_classes < 2 || num_groups < 1 || appearance_dim < 1) {
    throw ValidationError("world: num_classes >= 2, num_groups >= 1 and "
                          "appearance_dim >= 1 required");
  }
  if (group_of_class.size() != static_cast<std::size_t>(num_classes) ||
      size_stats.size() != static_cast<std::size_t>(num_classes) ||
      prototypes.size() != static_cast<std::size_t>(num_classes)) {
    throw ValidationError("world: per-class arrays must have num_classes entries");
  }
  std::vector<int> group_counts(static_cast<std::size_t>(num_groups), 0);
  for (int g : group_of_class) {
    if (g < 0 || g >= num_groups) {
      throw ValidationError("world: class group id out of range");
    }
    ++group_counts[static_cast<std::size_t>(g)];
  }
  for (int count : group_counts) {
    if (count == 0) throw ValidationError("world: empty co-occurrence group");
  }
  for (const ClassSizeStat& s : size_stats) {
    if (!(s.mean_area > 0.0) || !(s.mean_area < 1.0)) {
      throw ValidationError("world: class mean area must lie in (0,1)");
    }
  }
  for (const auto& p : prototypes) {
    if (p.size() != static_cast<std::size_t>(appearance_dim)) {
      throw ValidationError("world: prototype dimension mismatch");
    }
  }
  if (scene_size_range[0] < 1 || scene_size_range[1] < scene_size_range[0]) {
    throw ValidationError("world: invalid scene_size_range");
  }
}

WorldModel generate_world(int num_classes, int num_groups, int appearance_dim,
                          std::uint64_t seed) {
  if (num_groups < 2 || num_classes < num_groups) {
    throw ValidationError("generate_world: need num_classes >= num_groups >= 2");
  }
  if (appearance_dim < 1) {
    throw ValidationError("generate_world: appearance_dim must be >= 1");
  }
  Rng rng(seed);
  WorldModel world;
  world.num_classes = num_classes;
  world.num_groups = num_groups;
  world.appearance_dim = appearance_dim;

  // Balanced random partition: shuffle classes, deal them round-robin.
  std::vector<int> classes(static_cast<std::size_t>(num_classes));
  std::iota(classes.begin(), classes.end(), 0);
  rng.shuffle(classes);
  world.group_of_class.assign(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    world.group_of_class[static_cast<std::size_t>(classes[i])] =
        static_cast<int>(i % static_cast<std::size_t>(num_groups));
  }

  // Mean box areas form a jittered geometric ladder within each group, so
  // box size carries class information beyond the co-occurrence group. All
  // means stay inside (0.005, 0.2).
  world.size_stats.resize(static_cast<std::size_t>(num_classes));
  const double area_lo = 0.008;
  const double area_hi = 0.19;
  for (int g = 0; g < num_groups; ++g) {
    const std::vector<int> members = world.classes_in_group(g);
    const double step =
        members.size() > 1
            ? std::pow(area_hi / area_lo,
                       1.0 / static_cast<double>(members.size() - 1))
            : 1.0;
    for (std::size_t rank = 0; rank < members.size(); ++rank) {
      ClassSizeStat& s = world.size_stats[static_cast<std::size_t>(members[rank])];
      const double jitter = std::exp(rng.uniform(-0.08, 0.08));
      s.mean_area = std::clamp(area_lo * std::pow(step, static_cast<double>(rank)) *
                                   jitter,
                               0.006, 0.199);
      s.log_sd = 0.2;
    }
  }

  world.prototypes.resize(static_cast<std::size_t>(num_classes));
  for (auto& p : world.prototypes) p = random_unit_vector(appearance_dim, rng);
  // Re-draw any prototype that lands too close to an earlier one.
  for (std::size_t c = 1; c < world.prototypes.size(); ++c) {
    bool collision = true;
    while (collision) {
      collision = false;
      for (std::size_t prev = 0; prev < c; ++prev) {
        if (cosine(world.prototypes[c], world.prototypes[prev]) >= 0.99) {
          world.prototypes[c] = random_unit_vector(appearance_dim, rng);
          collision = true;
          break;
        }
      }
    }
  }

  world.validate();
  return world;
}

std::vector<double> sample_appearance(const WorldModel& world, int label,
                                      Rng& rng) {
  if (label < 0 || label >= world.num_classes) {
    throw IndexError("sample_appearance: label " + std::to_string(label) +
                     " outside world vocabulary");
  }
  std::vector<double> v = world.prototypes[static_cast<std::size_t>(label)];
  for (double& x : v) x += world.noise_scale * rng.normal();
  return v;
}

SceneGraph generate_scene(const WorldModel& world, Rng& rng,
                          std::int64_t scene_id) {
  world.validate();
  const int group = static_cast<int>(rng.uniform_int(
      static_cast<std::uint64_t>(world.num_groups)));
  const std::vector<int> group_classes = world.classes_in_group(group);
  const int span = world.scene_size_range[1] - world.scene_size_range[0] + 1;
  const int n = world.scene_size_range[0] +
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span)));

  std::vector<ObjectNode> nodes;
  nodes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = group_classes[rng.uniform_int(group_classes.size())];
    const ClassSizeStat& stat = world.size_stats[static_cast<std::size_t>(label)];

    double area = stat.mean_area * std::exp(stat.log_sd * rng.normal());
    area = std::clamp(area, stat.mean_area / 3.0, stat.mean_area * 3.0);
    // Aspect ratio bounded so that both sides fit the unit square.
    double ratio = std::exp(rng.uniform(-std::log(2.0), std::log(2.0)));
    ratio = std::clamp(ratio, area, 1.0 / area);
    const double w = std::sqrt(area * ratio);
    const double h = std::sqrt(area / ratio);

    ObjectNode node;
    node.box.xmin = rng.uniform(0.0, 1.0 - w);
    node.box.ymin = rng.uniform(0.0, 1.0 - h);
    node.box.xmax = node.box.xmin + w;
    node.box.ymax = node.box.ymin + h;
    node.label = label;
    node.appearance = sample_appearance(world, label, rng);
    nodes.push_back(std::move(node));
  }
  return build_scene_graph(std::move(nodes), 1.0, 1.0,
                           EdgePolicy::fully_connected, scene_id);
}

std::pair<SceneGraph, Injection> inject_cooccurrence_ooc(const SceneGraph& scene,
                                                         const WorldModel& world,
                                                         Rng& rng) {
  if (world.num_groups < 2) {
    throw ValidationError("inject_cooccurrence_ooc: world has a single group");
  }
  SceneGraph out = scene;
  const std::size_t node_index = rng.uniform_int(out.size());
  ObjectNode& node = out.nodes[node_index];
  if (!node.label.has_value()) {
    throw ValidationError("inject_cooccurrence_ooc: node has no label");
  }
  const int old_label = *node.label;
  const int old_group = world.group_of_class[static_cast<std::size_t>(old_label)];

  std::vector<int> candidates;
  for (int c = 0; c < world.num_classes; ++c) {
    if (world.group_of_class[static_cast<std::size_t>(c)] != old_group) {
      candidates.push_back(c);
    }
  }
  const int new_label = candidates[rng.uniform_int(candidates.size())];
  node.label = new_label;
  node.appearance = sample_appearance(world, new_label, rng);
  node.is_ooc_truth = true;
  node.violation = Violation::cooccurrence;

  Injection inj;
  inj.scene_id = out.id;
  inj.node_index = static_cast<int>(node_index);
  inj.kind = Violation::cooccurrence;
  inj.old_label = old_label;
  inj.new_label = new_label;
  return {std::move(out), inj};
}

std::pair<SceneGraph, Injection> inject_size_ooc(const SceneGraph& scene,
                                                 const WorldModel& world,
                                                 Rng& rng,
                                                 std::array<double, 2> scale_range) {
  (void)world;
  SceneGraph out = scene;
  const std::size_t node_index = rng.uniform_int(out.size());
  ObjectNode& node = out.nodes[node_index];

  const double factor = rng.uniform(scale_range[0], scale_range[1]);
  const double cx = 0.5 * (node.box.xmin + node.box.xmax);
  const double cy = 0.5 * (node.box.ymin + node.box.ymax);
  const double half_w = 0.5 * node.box.width() * factor;
  const double half_h = 0.5 * node.box.height() * factor;
  node.box.xmin = std::max(cx - half_w, 0.0);
  node.box.xmax = std::min(cx + half_w, out.image_w);
  node.box.ymin = std::max(cy - half_h, 0.0);
  node.box.ymax = std::min(cy + half_h, out.image_h);
  node.is_ooc_truth = true;
  node.violation = Violation::size;

  Injection inj;
  inj.scene_id = out.id;
  inj.node_index = static_cast<int>(node_index);
  inj.kind = Violation::size;
  inj.scale_factor = factor;
  return {std::move(out), inj};
}

Dataset generate_dataset(const WorldModel& world, const GenConfig& config) {
  world.validate();
  if (config.num_train_scenes < 0 || config.num_test_scenes < 0) {
    throw ValidationError("generate_dataset: scene counts must be >= 0");
  }
  if (config.ooc_fraction < 0.0 || config.ooc_fraction > 1.0) {
    throw ValidationError("generate_dataset: ooc_fraction must lie in [0,1]");
  }
  const double weight_sum = config.cooccurrence_weight + config.size_weight;
  if (config.cooccurrence_weight < 0.0 || config.size_weight < 0.0 ||
      std::abs(weight_sum - 1.0) > 1e-9) {
    throw ValidationError("generate_dataset: violation weights must be "
                          "nonnegative and sum to 1");
  }

  Dataset dataset;
  dataset.world = world;

  for (int i = 0; i < config.num_train_scenes; ++i) {
    Rng rng = Rng::derive(config.seed, kStreamTrain,
                          static_cast<std::uint64_t>(i));
    dataset.train.push_back(generate_scene(world, rng, i));
  }

  // Which test scenes receive an injection: a seeded shuffle picks exactly
  // round(ooc_fraction * num_test) of them.
  const int num_ooc = static_cast<int>(
      std::llround(config.ooc_fraction * config.num_test_scenes));
  std::vector<int> test_indices(static_cast<std::size_t>(config.num_test_scenes));
  std::iota(test_indices.begin(), test_indices.end(), 0);
  Rng select_rng = Rng::derive(config.seed, kStreamSelect);
  select_rng.shuffle(test_indices);
  std::vector<bool> is_ooc_scene(static_cast<std::size_t>(config.num_test_scenes),
                                 false);
  for (int k = 0; k < num_ooc; ++k) {
    is_ooc_scene[static_cast<std::size_t>(test_indices[static_cast<std::size_t>(k)])] =
        true;
  }

  for (int i = 0; i < config.num_test_scenes; ++i) {
    const std::int64_t scene_id = config.num_train_scenes + i;
    Rng rng = Rng::derive(config.seed, kStreamTest,
                          static_cast<std::uint64_t>(i));
    SceneGraph scene = generate_scene(world, rng, scene_id);
    if (is_ooc_scene[static_cast<std::size_t>(i)]) {
      Rng inject_rng = Rng::derive(config.seed, kStreamInject,
                                   static_cast<std::uint64_t>(i));
      const bool cooc = inject_rng.uniform() < config.cooccurrence_weight;
      auto [injected, record] =
          cooc ? inject_cooccurrence_ooc(scene, world, inject_rng)
               : inject_size_ooc(scene, world, inject_rng,
                                 config.size_scale_range);
      scene = std::move(injected);
      dataset.manifest.push_back(record);
    }
    dataset.test.push_back(std::move(scene));
  }
  return dataset;
}

}  // namespace gcrn

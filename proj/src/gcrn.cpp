#include "gcrn/gcrn.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace gcrn {

namespace {

constexpr double kProbFloor = 1e-12;

std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  return order;
}

// The n masked input matrices of a scene differ from the unmasked one only
// in one row's label slot, so they are stamped out from a shared base.
Matrix masked_copy(const Matrix& base, std::size_t node, int num_classes) {
  Matrix x = base;
  double* row = x.row_ptr(node);
  std::fill(row, row + num_classes, 0.0);
  return x;
}

}  // namespace

Gcrn Gcrn::init(int num_classes, int appearance_dim,
                const std::vector<int>& hidden, std::uint64_t seed) {
  if (num_classes < 2) throw ValidationError("gcrn: need at least 2 classes");
  if (appearance_dim < 1) {
    throw ValidationError("gcrn: appearance_dim must be >= 1");
  }
  Gcrn g;
  g.num_classes = num_classes;
  g.appearance_dim = appearance_dim;
  GcnConfig repg_cfg{appearance_dim + 11, hidden, num_classes};
  GcnConfig cong_cfg{num_classes + 11, hidden, num_classes};
  Rng rng(seed);
  g.repg = GcnModel::init(repg_cfg, rng.next_u64());
  g.cong = GcnModel::init(cong_cfg, rng.next_u64());
  return g;
}

TrainHistory pretrain_repg(Gcrn& gcrn, AdamWState& repg_state,
                           const std::vector<SceneGraph>& scenes, int epochs,
                           std::uint64_t seed) {
  std::vector<std::vector<int>> targets;
  targets.reserve(scenes.size());
  for (const SceneGraph& scene : scenes) targets.push_back(true_labels(scene));
  TrainHistory history =
      train_epochs(gcrn.repg, repg_state, scenes, targets, epochs, seed,
                   [](const SceneGraph& s) { return repg_inputs(s); });
  gcrn.repg_pretrained = true;
  return history;
}

Matrix cong_forward(const Gcrn& gcrn, const SceneGraph& scene,
                    const std::vector<int>& assumed_labels) {
  const std::size_t n = scene.size();
  const Matrix base =
      cong_inputs(scene, assumed_labels, gcrn.num_classes, std::nullopt);
  Matrix probs(n, static_cast<std::size_t>(gcrn.num_classes));
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix inputs = masked_copy(base, i, gcrn.num_classes);
    GcnForwardResult fwd = gcn_forward(gcrn.cong, scene.adjacency_norm, inputs);
    std::copy(fwd.probs.row_ptr(i), fwd.probs.row_ptr(i) + probs.cols,
              probs.row_ptr(i));
  }
  return probs;
}

double em_step_cong(Gcrn& gcrn, AdamWState& cong_state,
                    const std::vector<SceneGraph>& scenes, int epochs, Rng& rng) {
  auto cong_params = param_tensors(gcrn.cong);
  double mean_loss = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t idx : shuffled_order(scenes.size(), rng)) {
      const SceneGraph& scene = scenes[idx];
      const std::vector<int> labels = true_labels(scene);
      const std::size_t n = scene.size();
      const double inv_n = 1.0 / static_cast<double>(n);
      const Matrix base =
          cong_inputs(scene, labels, gcrn.num_classes, std::nullopt);

      GcnGradients scene_grads = GcnGradients::zeros_like(gcrn.cong);
      double scene_loss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const Matrix inputs = masked_copy(base, i, gcrn.num_classes);
        GcnForwardResult fwd =
            gcn_forward(gcrn.cong, scene.adjacency_norm, inputs);
        // Only row i is supervised in the pass where node i is masked.
        scene_loss -=
            inv_n * std::log(std::max(fwd.probs(i, labels[i]), kProbFloor));
        Matrix grad_logits(n, static_cast<std::size_t>(gcrn.num_classes));
        for (std::size_t j = 0; j < grad_logits.cols; ++j) {
          grad_logits(i, j) = fwd.probs(i, j) * inv_n;
        }
        grad_logits(i, labels[i]) -= inv_n;
        scene_grads.accumulate(gcn_backward(gcrn.cong, fwd.cache, grad_logits));
      }
      loss_sum += scene_loss;
      adamw_step(cong_params, param_tensors(scene_grads), cong_state);
    }
    mean_loss = loss_sum / static_cast<double>(scenes.size());
  }
  return mean_loss;
}

double em_step_repg_match(Gcrn& gcrn, AdamWState& repg_state,
                          const std::vector<SceneGraph>& scenes, int epochs,
                          Rng& rng) {
  auto repg_params = param_tensors(gcrn.repg);
  double mean_loss = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t idx : shuffled_order(scenes.size(), rng)) {
      const SceneGraph& scene = scenes[idx];
      GcnForwardResult repg_fwd =
          gcn_forward(gcrn.repg, scene.adjacency_norm, repg_inputs(scene));
      const std::vector<int> assumed = argmax_rows(repg_fwd.probs);
      const Matrix cong_probs = cong_forward(gcrn, scene, assumed);
      const std::vector<int> targets = argmax_rows(cong_probs);

      CrossEntropyResult ce = cross_entropy(repg_fwd.probs, targets);
      loss_sum += ce.loss;
      GcnGradients grads = gcn_backward(gcrn.repg, repg_fwd.cache, ce.grad_logits);
      adamw_step(repg_params, param_tensors(grads), repg_state);
    }
    mean_loss = loss_sum / static_cast<double>(scenes.size());
  }
  return mean_loss;
}

double disagreement(const Gcrn& gcrn, const std::vector<SceneGraph>& scenes) {
  std::size_t total = 0;
  std::size_t differing = 0;
  for (const SceneGraph& scene : scenes) {
    GcnForwardResult repg_fwd =
        gcn_forward(gcrn.repg, scene.adjacency_norm, repg_inputs(scene));
    const std::vector<int> repg_argmax = argmax_rows(repg_fwd.probs);
    const Matrix cong_probs = cong_forward(gcrn, scene, repg_argmax);
    const std::vector<int> cong_argmax = argmax_rows(cong_probs);
    for (std::size_t i = 0; i < scene.size(); ++i) {
      ++total;
      if (repg_argmax[i] != cong_argmax[i]) ++differing;
    }
  }
  if (total == 0) throw ValidationError("disagreement: no nodes");
  return static_cast<double>(differing) / static_cast<double>(total);
}

EmHistory em_train(Gcrn& gcrn, AdamWState& repg_state, AdamWState& cong_state,
                   const std::vector<SceneGraph>& scenes,
                   const EmOptions& options) {
  if (!gcrn.repg_pretrained) {
    throw StateError("em_train called before pretrain_repg");
  }
  EmHistory history;
  Rng rng(options.seed);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    EmIterationRecord rec;
    rec.iteration = iter;
    rec.cong_loss =
        em_step_cong(gcrn, cong_state, scenes, options.inner_epochs, rng);
    rec.repg_loss =
        em_step_repg_match(gcrn, repg_state, scenes, options.inner_epochs, rng);
    rec.disagreement = disagreement(gcrn, scenes);
    history.push_back(rec);
    if (rec.disagreement <= options.disagreement_threshold) break;
  }
  return history;
}

Prediction predict(const Gcrn& gcrn, const SceneGraph& scene,
                   LabelSource label_source) {
  Prediction pred;
  GcnForwardResult repg_fwd =
      gcn_forward(gcrn.repg, scene.adjacency_norm, repg_inputs(scene));
  pred.repg_probs = std::move(repg_fwd.probs);

  std::vector<int> assumed;
  switch (label_source) {
    case LabelSource::ground_truth:
      assumed = true_labels(scene);
      break;
    case LabelSource::repg_argmax:
      assumed = argmax_rows(pred.repg_probs);
      break;
  }
  pred.cong_probs = cong_forward(gcrn, scene, assumed);
  return pred;
}

}  // namespace gcrn

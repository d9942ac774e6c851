#pragma once

#include <cstdint>
#include <vector>

#include "gcrn/gcn.hpp"
#include "gcrn/scene.hpp"

namespace gcrn {

/// The dual-graph model: RepG classifies nodes from appearance+geometry,
/// ConG classifies them from neighbor labels+geometry. The two are coupled
/// only through the alternating training loop.
struct Gcrn {
  GcnModel repg;
  GcnModel cong;
  int num_classes = 0;
  int appearance_dim = 0;
  bool repg_pretrained = false;

  static Gcrn init(int num_classes, int appearance_dim,
                   const std::vector<int>& hidden, std::uint64_t seed);
};

struct EmIterationRecord {
  int iteration = 0;
  double repg_loss = 0.0;
  double cong_loss = 0.0;
  double disagreement = 0.0;  // fraction of nodes in [0,1]
};

using EmHistory = std::vector<EmIterationRecord>;

struct EmOptions {
  int max_iterations = 10;
  double disagreement_threshold = 0.01;
  int inner_epochs = 1;
  std::uint64_t seed = 0;
};

/// Supervised warm-up of RepG on ground-truth labels; ConG is untouched.
TrainHistory pretrain_repg(Gcrn& gcrn, AdamWState& repg_state,
                           const std::vector<SceneGraph>& scenes, int epochs,
                           std::uint64_t seed);

/// Per-node label distributions predicted from context alone. Row i comes
/// from a forward pass in which node i's own label slot is zeroed, so a
/// node's output never depends on its own assumed label.
Matrix cong_forward(const Gcrn& gcrn, const SceneGraph& scene,
                    const std::vector<int>& assumed_labels);

/// One pass of ConG training on ground-truth labels: per node, the input is
/// the neighbors' true labels (own slot masked) and the target is the node's
/// own true label. One accumulated step per scene. Returns the mean loss.
double em_step_cong(Gcrn& gcrn, AdamWState& cong_state,
                    const std::vector<SceneGraph>& scenes, int epochs, Rng& rng);

/// One pass of RepG-matches-ConG training: ConG, run with RepG's current
/// argmax labels, produces targets; RepG is trained on those with
/// cross-entropy. Returns the mean loss.
double em_step_repg_match(Gcrn& gcrn, AdamWState& repg_state,
                          const std::vector<SceneGraph>& scenes, int epochs,
                          Rng& rng);

/// Fraction of nodes where argmax(RepG) differs from argmax(ConG run with
/// RepG's argmax labels). Pure function of model and data.
double disagreement(const Gcrn& gcrn, const std::vector<SceneGraph>& scenes);

/// Alternates em_step_cong / em_step_repg_match until the disagreement drops
/// to the threshold or max_iterations is reached. Requires pretrain_repg to
/// have run first.
EmHistory em_train(Gcrn& gcrn, AdamWState& repg_state, AdamWState& cong_state,
                   const std::vector<SceneGraph>& scenes,
                   const EmOptions& options);

enum class LabelSource { ground_truth, repg_argmax };

struct Prediction {
  Matrix repg_probs;
  Matrix cong_probs;
};

/// RepG's context-free-label distribution and ConG's context-informed one,
/// with ConG's assumed labels taken from the requested source.
Prediction predict(const Gcrn& gcrn, const SceneGraph& scene,
                   LabelSource label_source);

}  // namespace gcrn

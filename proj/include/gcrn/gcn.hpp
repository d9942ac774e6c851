#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gcrn/matrix.hpp"
#include "gcrn/rng.hpp"
#include "gcrn/scene.hpp"

namespace gcrn {

struct GcnConfig {
  int input_dim = 0;
  std::vector<int> hidden = {256, 128, 64, 64};
  int num_classes = 0;
};

struct GcnLayerParams {
  Matrix weight;              // in_dim x out_dim
  std::vector<double> bias;   // out_dim
  std::optional<Matrix> projection;  // residual projection when dims differ
};

/// Residual graph-convolution stack with a linear softmax head. Each layer
/// computes H' = ReLU(A_hat H W + b) + proj(H), where proj is a learned
/// linear map when in/out widths differ and the identity otherwise.
struct GcnModel {
  GcnConfig config;
  std::vector<GcnLayerParams> layers;
  Matrix head_weight;  // last hidden width x num_classes
  std::vector<double> head_bias;

  static GcnModel init(const GcnConfig& config, std::uint64_t seed);
};

/// Activations retained by a forward pass for the matching backward pass.
struct GcnCache {
  Matrix adjacency_norm;
  std::vector<Matrix> layer_inputs;  // H^l entering each layer, plus H^L
  std::vector<Matrix> propagated;    // A_hat * H^l per layer
  std::vector<Matrix> preacts;       // A_hat H^l W + b per layer
};

struct GcnForwardResult {
  Matrix logits;
  Matrix probs;
  GcnCache cache;
};

GcnForwardResult gcn_forward(const GcnModel& model, const Matrix& adjacency_norm,
                             const Matrix& node_inputs);

/// Parameter gradients; mirrors the model's parameter shapes.
struct GcnGradients {
  std::vector<GcnLayerParams> layers;
  Matrix head_weight;
  std::vector<double> head_bias;

  static GcnGradients zeros_like(const GcnModel& model);
  void accumulate(const GcnGradients& other);
  void scale(double s);
};

/// Exact reverse-mode gradients through head, residuals, ReLU and the
/// adjacency product (A_hat is symmetric, so A_hat^T = A_hat).
GcnGradients gcn_backward(const GcnModel& model, const GcnCache& cache,
                          const Matrix& grad_logits);

// --- optimizer ---

struct TensorRef {
  double* data = nullptr;
  std::size_t size = 0;
};

std::vector<TensorRef> param_tensors(GcnModel& model);
std::vector<TensorRef> param_tensors(GcnGradients& grads);

struct AdamWHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamWState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step_count = 0;
  AdamWHyper hyper;

  static AdamWState for_tensors(const std::vector<TensorRef>& tensors,
                                const AdamWHyper& hyper);
};

/// One AdamW update with bias correction applied in place to `params`.
void adamw_step(const std::vector<TensorRef>& params,
                const std::vector<TensorRef>& grads, AdamWState& state);

// --- training ---

struct TrainHistory {
  std::vector<double> epoch_losses;  // mean per-scene loss per epoch
};

using SceneInputFn = std::function<Matrix(const SceneGraph&)>;

/// One cross-entropy gradient step per scene; an epoch is one seeded shuffle
/// over the scenes. Deterministic for a fixed seed.
TrainHistory train_epochs(GcnModel& model, AdamWState& state,
                          const std::vector<SceneGraph>& scenes,
                          const std::vector<std::vector<int>>& targets,
                          int epochs, std::uint64_t seed,
                          const SceneInputFn& input_fn);

}  // namespace gcrn

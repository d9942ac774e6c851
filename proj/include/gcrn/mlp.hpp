#pragma once

#include <cstdint>
#include <vector>

#include "gcrn/gcn.hpp"
#include "gcrn/matrix.hpp"

namespace gcrn {

struct MlpConfig {
  int input_dim = 0;
  std::vector<int> hidden = {64, 64};
  int num_classes = 0;
};

/// Per-row residual MLP: H' = ReLU(H W + b) + proj(H). Each row is handled
/// independently, so a batch row is one object with no view of the others.
struct MlpModel {
  MlpConfig config;
  std::vector<GcnLayerParams> layers;
  Matrix head_weight;
  std::vector<double> head_bias;

  static MlpModel init(const MlpConfig& config, std::uint64_t seed);
};

struct MlpCache {
  std::vector<Matrix> layer_inputs;
  std::vector<Matrix> preacts;
};

struct MlpForwardResult {
  Matrix logits;
  Matrix probs;
  MlpCache cache;
};

MlpForwardResult mlp_forward(const MlpModel& model, const Matrix& inputs);

struct MlpGradients {
  std::vector<GcnLayerParams> layers;
  Matrix head_weight;
  std::vector<double> head_bias;
};

MlpGradients mlp_backward(const MlpModel& model, const MlpCache& cache,
                          const Matrix& grad_logits);

std::vector<TensorRef> param_tensors(MlpModel& model);
std::vector<TensorRef> param_tensors(MlpGradients& grads);

}  // namespace gcrn

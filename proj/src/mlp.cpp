#include "gcrn/mlp.hpp"

#include <cmath>
#include <string>

namespace gcrn {

namespace {

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (double& v : m.data) v = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

MlpModel MlpModel::init(const MlpConfig& config, std::uint64_t seed) {
  if (config.input_dim <= 0 || config.num_classes <= 0 || config.hidden.empty()) {
    throw ValidationError("mlp config: input_dim, num_classes and at least one "
                          "hidden width are required");
  }
  Rng rng(seed);
  MlpModel model;
  model.config = config;
  std::size_t in_dim = static_cast<std::size_t>(config.input_dim);
  for (int width : config.hidden) {
    if (width <= 0) throw ValidationError("mlp config: hidden widths must be > 0");
    const std::size_t out_dim = static_cast<std::size_t>(width);
    GcnLayerParams layer;
    layer.weight = glorot_uniform(in_dim, out_dim, rng);
    layer.bias.assign(out_dim, 0.0);
    if (in_dim != out_dim) layer.projection = glorot_uniform(in_dim, out_dim, rng);
    model.layers.push_back(std::move(layer));
    in_dim = out_dim;
  }
  model.head_weight =
      glorot_uniform(in_dim, static_cast<std::size_t>(config.num_classes), rng);
  model.head_bias.assign(static_cast<std::size_t>(config.num_classes), 0.0);
  return model;
}

MlpForwardResult mlp_forward(const MlpModel& model, const Matrix& inputs) {
  if (inputs.cols != static_cast<std::size_t>(model.config.input_dim)) {
    throw ShapeError("mlp_forward: input dim " + std::to_string(inputs.cols) +
                     " does not match model input dim " +
                     std::to_string(model.config.input_dim));
  }
  MlpForwardResult res;
  Matrix h = inputs;
  for (const GcnLayerParams& layer : model.layers) {
    res.cache.layer_inputs.push_back(h);
    Matrix preact = matmul(h, layer.weight);
    add_row_vector_inplace(preact, layer.bias);
    Matrix next = relu(preact);
    if (layer.projection) {
      add_inplace(next, matmul(h, *layer.projection));
    } else {
      add_inplace(next, h);
    }
    res.cache.preacts.push_back(std::move(preact));
    h = std::move(next);
  }
  res.cache.layer_inputs.push_back(h);
  res.logits = matmul(res.cache.layer_inputs.back(), model.head_weight);
  add_row_vector_inplace(res.logits, model.head_bias);
  res.probs = softmax_rows(res.logits);
  return res;
}

MlpGradients mlp_backward(const MlpModel& model, const MlpCache& cache,
                          const Matrix& grad_logits) {
  const std::size_t num_layers = model.layers.size();
  if (cache.layer_inputs.size() != num_layers + 1 ||
      cache.preacts.size() != num_layers) {
    throw ValidationError("mlp_backward: cache does not match this model");
  }
  MlpGradients grads;
  grads.layers.resize(num_layers);

  grads.head_weight = matmul_at_b(cache.layer_inputs.back(), grad_logits);
  grads.head_bias = column_sums(grad_logits);
  Matrix grad_h = matmul_a_bt(grad_logits, model.head_weight);

  for (std::size_t l = num_layers; l-- > 0;) {
    const GcnLayerParams& layer = model.layers[l];
    const Matrix& h_in = cache.layer_inputs[l];

    Matrix grad_preact = relu_backward(grad_h, cache.preacts[l]);
    grads.layers[l].weight = matmul_at_b(h_in, grad_preact);
    grads.layers[l].bias = column_sums(grad_preact);

    Matrix grad_in = matmul_a_bt(grad_preact, layer.weight);
    if (layer.projection) {
      grads.layers[l].projection = matmul_at_b(h_in, grad_h);
      add_inplace(grad_in, matmul_a_bt(grad_h, *layer.projection));
    } else {
      add_inplace(grad_in, grad_h);
    }
    grad_h = std::move(grad_in);
  }
  return grads;
}

std::vector<TensorRef> param_tensors(MlpModel& model) {
  std::vector<TensorRef> refs;
  for (GcnLayerParams& layer : model.layers) {
    refs.push_back({layer.weight.data.data(), layer.weight.data.size()});
    refs.push_back({layer.bias.data(), layer.bias.size()});
    if (layer.projection) {
      refs.push_back({layer.projection->data.data(),
                      layer.projection->data.size()});
    }
  }
  refs.push_back({model.head_weight.data.data(), model.head_weight.data.size()});
  refs.push_back({model.head_bias.data(), model.head_bias.size()});
  return refs;
}

std::vector<TensorRef> param_tensors(MlpGradients& grads) {
  std::vector<TensorRef> refs;
  for (GcnLayerParams& layer : grads.layers) {
    refs.push_back({layer.weight.data.data(), layer.weight.data.size()});
    refs.push_back({layer.bias.data(), layer.bias.size()});
    if (layer.projection) {
      refs.push_back({layer.projection->data.data(),
                      layer.projection->data.size()});
    }
  }
  refs.push_back({grads.head_weight.data.data(), grads.head_weight.data.size()});
  refs.push_back({grads.head_bias.data(), grads.head_bias.size()});
  return refs;
}

}  // namespace gcrn

#include "gcrn/gcn.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace gcrn {

namespace {

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (double& v : m.data) v = rng.uniform(-limit, limit);
  return m;
}

void check_config(const GcnConfig& config) {
  if (config.input_dim <= 0 || config.num_classes <= 0 || config.hidden.empty()) {
    throw ValidationError("gcn config: input_dim, num_classes and at least one "
                          "hidden width are required");
  }
  for (int w : config.hidden) {
    if (w <= 0) throw ValidationError("gcn config: hidden widths must be > 0");
  }
}

}  // namespace

GcnModel GcnModel::init(const GcnConfig& config, std::uint64_t seed) {
  check_config(config);
  Rng rng(seed);
  GcnModel model;
  model.config = config;

  std::size_t in_dim = static_cast<std::size_t>(config.input_dim);
  for (int width : config.hidden) {
    const std::size_t out_dim = static_cast<std::size_t>(width);
    GcnLayerParams layer;
    layer.weight = glorot_uniform(in_dim, out_dim, rng);
    layer.bias.assign(out_dim, 0.0);
    if (in_dim != out_dim) {
      layer.projection = glorot_uniform(in_dim, out_dim, rng);
    }
    model.layers.push_back(std::move(layer));
    in_dim = out_dim;
  }
  model.head_weight =
      glorot_uniform(in_dim, static_cast<std::size_t>(config.num_classes), rng);
  model.head_bias.assign(static_cast<std::size_t>(config.num_classes), 0.0);
  return model;
}

GcnForwardResult gcn_forward(const GcnModel& model, const Matrix& adjacency_norm,
                             const Matrix& node_inputs) {
  if (adjacency_norm.rows != adjacency_norm.cols ||
      adjacency_norm.rows != node_inputs.rows) {
    throw ShapeError("gcn_forward: adjacency (" +
                     std::to_string(adjacency_norm.rows) + "x" +
                     std::to_string(adjacency_norm.cols) + ") vs inputs (" +
                     std::to_string(node_inputs.rows) + " rows)");
  }
  if (node_inputs.cols != static_cast<std::size_t>(model.config.input_dim)) {
    throw ShapeError("gcn_forward: input dim " + std::to_string(node_inputs.cols) +
                     " does not match model input dim " +
                     std::to_string(model.config.input_dim));
  }

  GcnForwardResult res;
  res.cache.adjacency_norm = adjacency_norm;
  Matrix h = node_inputs;
  for (const GcnLayerParams& layer : model.layers) {
    res.cache.layer_inputs.push_back(h);
    Matrix propagated = matmul(adjacency_norm, h);
    Matrix preact = matmul(propagated, layer.weight);
    add_row_vector_inplace(preact, layer.bias);
    res.cache.propagated.push_back(std::move(propagated));

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

GcnGradients GcnGradients::zeros_like(const GcnModel& model) {
  GcnGradients g;
  for (const GcnLayerParams& layer : model.layers) {
    GcnLayerParams z;
    z.weight = Matrix(layer.weight.rows, layer.weight.cols);
    z.bias.assign(layer.bias.size(), 0.0);
    if (layer.projection) {
      z.projection = Matrix(layer.projection->rows, layer.projection->cols);
    }
    g.layers.push_back(std::move(z));
  }
  g.head_weight = Matrix(model.head_weight.rows, model.head_weight.cols);
  g.head_bias.assign(model.head_bias.size(), 0.0);
  return g;
}

void GcnGradients::accumulate(const GcnGradients& other) {
  if (layers.size() != other.layers.size()) {
    throw ShapeError("gradient accumulate: layer count mismatch");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    add_inplace(layers[l].weight, other.layers[l].weight);
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
      layers[l].bias[i] += other.layers[l].bias[i];
    }
    if (layers[l].projection) {
      add_inplace(*layers[l].projection, *other.layers[l].projection);
    }
  }
  add_inplace(head_weight, other.head_weight);
  for (std::size_t i = 0; i < head_bias.size(); ++i) {
    head_bias[i] += other.head_bias[i];
  }
}

void GcnGradients::scale(double s) {
  for (GcnLayerParams& layer : layers) {
    scale_inplace(layer.weight, s);
    for (double& b : layer.bias) b *= s;
    if (layer.projection) scale_inplace(*layer.projection, s);
  }
  scale_inplace(head_weight, s);
  for (double& b : head_bias) b *= s;
}

GcnGradients gcn_backward(const GcnModel& model, const GcnCache& cache,
                          const Matrix& grad_logits) {
  const std::size_t num_layers = model.layers.size();
  if (cache.layer_inputs.size() != num_layers + 1 ||
      cache.preacts.size() != num_layers ||
      cache.propagated.size() != num_layers) {
    throw ValidationError("gcn_backward: cache does not match this model");
  }
  if (grad_logits.rows != cache.layer_inputs[0].rows ||
      grad_logits.cols != static_cast<std::size_t>(model.config.num_classes)) {
    throw ValidationError("gcn_backward: grad_logits shape does not match cache");
  }
  if (cache.layer_inputs[0].cols !=
      static_cast<std::size_t>(model.config.input_dim)) {
    throw ValidationError("gcn_backward: cached inputs do not match model");
  }

  GcnGradients grads = GcnGradients::zeros_like(model);

  const Matrix& final_hidden = cache.layer_inputs.back();
  grads.head_weight = matmul_at_b(final_hidden, grad_logits);
  grads.head_bias = column_sums(grad_logits);
  Matrix grad_h = matmul_a_bt(grad_logits, model.head_weight);

  for (std::size_t l = num_layers; l-- > 0;) {
    const GcnLayerParams& layer = model.layers[l];
    const Matrix& h_in = cache.layer_inputs[l];

    Matrix grad_preact = relu_backward(grad_h, cache.preacts[l]);
    grads.layers[l].weight = matmul_at_b(cache.propagated[l], grad_preact);
    grads.layers[l].bias = column_sums(grad_preact);

    // Conv path: A_hat^T (G W^T) with A_hat symmetric.
    Matrix grad_conv =
        matmul(cache.adjacency_norm, matmul_a_bt(grad_preact, layer.weight));
    if (layer.projection) {
      grads.layers[l].projection = matmul_at_b(h_in, grad_h);
      Matrix grad_res = matmul_a_bt(grad_h, *layer.projection);
      add_inplace(grad_conv, grad_res);
    } else {
      add_inplace(grad_conv, grad_h);
    }
    grad_h = std::move(grad_conv);
  }
  return grads;
}

std::vector<TensorRef> param_tensors(GcnModel& model) {
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

std::vector<TensorRef> param_tensors(GcnGradients& grads) {
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

AdamWState AdamWState::for_tensors(const std::vector<TensorRef>& tensors,
                                   const AdamWHyper& hyper) {
  AdamWState state;
  state.hyper = hyper;
  for (const TensorRef& t : tensors) {
    state.first_moment.emplace_back(t.size, 0.0);
    state.second_moment.emplace_back(t.size, 0.0);
  }
  return state;
}

void adamw_step(const std::vector<TensorRef>& params,
                const std::vector<TensorRef>& grads, AdamWState& state) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size()) {
    throw ShapeError("adamw_step: parameter/gradient/state tensor counts differ");
  }
  state.step_count += 1;
  const AdamWHyper& h = state.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step_count));

  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size != grads[t].size ||
        params[t].size != state.first_moment[t].size()) {
      throw ShapeError("adamw_step: tensor " + std::to_string(t) +
                       " size mismatch");
    }
    double* p = params[t].data;
    const double* g = grads[t].data;
    double* m = state.first_moment[t].data();
    double* v = state.second_moment[t].data();
    for (std::size_t i = 0; i < params[t].size; ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= h.lr * (m_hat / (std::sqrt(v_hat) + h.eps) + h.weight_decay * p[i]);
    }
  }
}

TrainHistory train_epochs(GcnModel& model, AdamWState& state,
                          const std::vector<SceneGraph>& scenes,
                          const std::vector<std::vector<int>>& targets,
                          int epochs, std::uint64_t seed,
                          const SceneInputFn& input_fn) {
  if (targets.size() != scenes.size()) {
    throw ValidationError("train_epochs: " + std::to_string(targets.size()) +
                          " target lists for " + std::to_string(scenes.size()) +
                          " scenes");
  }
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    if (targets[s].size() != scenes[s].size()) {
      throw ValidationError("train_epochs: scene " + std::to_string(s) +
                            " has " + std::to_string(scenes[s].size()) +
                            " nodes but " + std::to_string(targets[s].size()) +
                            " targets");
    }
  }

  TrainHistory history;
  if (epochs <= 0 || scenes.empty()) return history;

  Rng rng(seed);
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);

  auto model_params = param_tensors(model);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const SceneGraph& scene = scenes[idx];
      GcnForwardResult fwd =
          gcn_forward(model, scene.adjacency_norm, input_fn(scene));
      CrossEntropyResult ce = cross_entropy(fwd.probs, targets[idx]);
      loss_sum += ce.loss;
      GcnGradients grads = gcn_backward(model, fwd.cache, ce.grad_logits);
      adamw_step(model_params, param_tensors(grads), state);
    }
    history.epoch_losses.push_back(loss_sum / static_cast<double>(scenes.size()));
  }
  return history;
}

}  // namespace gcrn

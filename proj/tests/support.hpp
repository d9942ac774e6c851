#pragma once

// Shared oracles for the unit and acceptance suites: random instances,
// finite-difference gradient checks, and a plain per-row MLP reference.

#include <cmath>
#include <vector>

#include "gcrn/gcn.hpp"
#include "gcrn/mlp.hpp"
#include "gcrn/rng.hpp"
#include "gcrn/scene.hpp"

namespace gcrn::testsupport {

inline SceneGraph random_scene(std::size_t num_nodes, int num_classes,
                               std::size_t appearance_dim, Rng& rng) {
  std::vector<ObjectNode> nodes;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    ObjectNode node;
    const double w = rng.uniform(0.05, 0.4);
    const double h = rng.uniform(0.05, 0.4);
    node.box.xmin = rng.uniform(0.0, 1.0 - w);
    node.box.ymin = rng.uniform(0.0, 1.0 - h);
    node.box.xmax = node.box.xmin + w;
    node.box.ymax = node.box.ymin + h;
    node.label = static_cast<int>(rng.uniform_int(num_classes));
    node.appearance.resize(appearance_dim);
    for (double& x : node.appearance) x = rng.uniform(-1.0, 1.0);
    nodes.push_back(std::move(node));
  }
  return build_scene_graph(std::move(nodes), 1.0, 1.0);
}

inline std::vector<int> random_targets(std::size_t n, int num_classes,
                                       Rng& rng) {
  std::vector<int> targets(n);
  for (int& t : targets) t = static_cast<int>(rng.uniform_int(num_classes));
  return targets;
}

inline double min_abs_preact(const GcnCache& cache) {
  double mn = 1e300;
  for (const Matrix& z : cache.preacts)
    for (double v : z.data) mn = std::min(mn, std::abs(v));
  return mn;
}

inline double min_abs_preact(const MlpCache& cache) {
  double mn = 1e300;
  for (const Matrix& z : cache.preacts)
    for (double v : z.data) mn = std::min(mn, std::abs(v));
  return mn;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool skipped_near_kink = false;  // instance rejected, caller should redraw
};

// Central finite differences over every parameter of a GCN against the
// analytic backward pass. Instances whose pre-activations sit too close to a
// ReLU kink are rejected rather than checked.
inline GradCheckResult gcn_gradient_check(GcnModel model,
                                          const Matrix& adjacency,
                                          const Matrix& inputs,
                                          const std::vector<int>& targets,
                                          double h = 1e-4,
                                          double kink_margin = 1e-3) {
  GradCheckResult result;
  {
    GcnForwardResult fwd = gcn_forward(model, adjacency, inputs);
    if (min_abs_preact(fwd.cache) < kink_margin) {
      result.skipped_near_kink = true;
      return result;
    }
    CrossEntropyResult ce = cross_entropy(fwd.probs, targets);
    GcnGradients analytic = gcn_backward(model, fwd.cache, ce.grad_logits);

    auto params = param_tensors(model);
    auto grads = param_tensors(analytic);
    auto loss_at = [&] {
      GcnForwardResult f = gcn_forward(model, adjacency, inputs);
      return cross_entropy(f.probs, targets).loss;
    };
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t i = 0; i < params[t].size; ++i) {
        const double saved = params[t].data[i];
        params[t].data[i] = saved + h;
        const double up = loss_at();
        params[t].data[i] = saved - h;
        const double down = loss_at();
        params[t].data[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic_g = grads[t].data[i];
        const double denom =
            std::max({std::abs(numeric), std::abs(analytic_g), 1e-6});
        result.max_rel_error = std::max(
            result.max_rel_error, std::abs(numeric - analytic_g) / denom);
        ++result.checked;
      }
    }
  }
  return result;
}

inline GradCheckResult mlp_gradient_check(MlpModel model, const Matrix& inputs,
                                          const std::vector<int>& targets,
                                          double h = 1e-4,
                                          double kink_margin = 1e-3) {
  GradCheckResult result;
  MlpForwardResult fwd = mlp_forward(model, inputs);
  if (min_abs_preact(fwd.cache) < kink_margin) {
    result.skipped_near_kink = true;
    return result;
  }
  CrossEntropyResult ce = cross_entropy(fwd.probs, targets);
  MlpGradients analytic = mlp_backward(model, fwd.cache, ce.grad_logits);

  auto params = param_tensors(model);
  auto grads = param_tensors(analytic);
  auto loss_at = [&] {
    MlpForwardResult f = mlp_forward(model, inputs);
    return cross_entropy(f.probs, targets).loss;
  };
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size; ++i) {
      const double saved = params[t].data[i];
      params[t].data[i] = saved + h;
      const double up = loss_at();
      params[t].data[i] = saved - h;
      const double down = loss_at();
      params[t].data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic_g = grads[t].data[i];
      const double denom =
          std::max({std::abs(numeric), std::abs(analytic_g), 1e-6});
      result.max_rel_error = std::max(result.max_rel_error,
                                      std::abs(numeric - analytic_g) / denom);
      ++result.checked;
    }
  }
  return result;
}

// Reference forward pass for the A_hat = I case: each row through
// ReLU(x W + b) + proj(x) layers and the linear head, coded independently of
// the library's matrix helpers.
inline std::vector<double> plain_mlp_row(const GcnModel& model,
                                         const std::vector<double>& input) {
  std::vector<double> h = input;
  for (const GcnLayerParams& layer : model.layers) {
    const std::size_t out_dim = layer.bias.size();
    std::vector<double> next(out_dim, 0.0);
    for (std::size_t j = 0; j < out_dim; ++j) {
      double z = layer.bias[j];
      for (std::size_t k = 0; k < h.size(); ++k) z += h[k] * layer.weight(k, j);
      next[j] = z > 0.0 ? z : 0.0;
      if (layer.projection) {
        double proj = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) {
          proj += h[k] * (*layer.projection)(k, j);
        }
        next[j] += proj;
      } else {
        next[j] += h[j];
      }
    }
    h = std::move(next);
  }
  std::vector<double> logits(model.head_bias.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    double z = model.head_bias[j];
    for (std::size_t k = 0; k < h.size(); ++k) z += h[k] * model.head_weight(k, j);
    logits[j] = z;
  }
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

}  // namespace gcrn::testsupport

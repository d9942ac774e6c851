#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcrn/mlp.hpp"
#include "gcrn/scene.hpp"

namespace gcrn {

/// Classifies a single object from its own appearance+geometry, with no view
/// of the rest of the scene. Input layout matches node_input_repg.
struct ContextFreeClassifier {
  MlpModel model;

  static ContextFreeClassifier init(int num_classes, int appearance_dim,
                                    const std::vector<int>& hidden,
                                    std::uint64_t seed);

  /// One row of class probabilities per node.
  Matrix predict(const SceneGraph& scene) const;
};

struct MlpTrainHistory {
  std::vector<double> epoch_losses;
};

/// Supervised cross-entropy training over per-node samples, batched one
/// scene at a time; deterministic for a fixed seed.
MlpTrainHistory train_context_free(ContextFreeClassifier& classifier,
                                   AdamWState& state,
                                   const std::vector<SceneGraph>& scenes,
                                   int epochs, std::uint64_t seed);

/// KL(p||q) with both log arguments floored at 1e-12; clamped at 0 so the
/// flooring can never produce a negative score.
double kl_divergence(std::span<const double> p, std::span<const double> q);

enum class KlMode { kl_free_to_ctx, kl_ctx_to_free, symmetric };

/// Divergence between the context-informed and context-free distributions
/// for one node; the monotone OOC evidence score.
double ooc_score(std::span<const double> context_probs,
                 std::span<const double> free_probs,
                 KlMode mode = KlMode::symmetric);

/// Low confidence of the context-free classifier as an OOC score:
/// 1 - max(free_probs). Shares the higher-is-more-OOC direction.
double softmax_confidence_baseline(std::span<const double> free_probs);

struct OocRecord {
  std::int64_t scene_id = 0;
  int node_index = 0;
  double score = 0.0;
  bool truth = false;
  Violation violation = Violation::none;
};

/// flag[i] = records[i].score > threshold (strict).
std::vector<bool> detect(const std::vector<OocRecord>& records,
                         double threshold);

std::string violation_name(Violation v);
Violation violation_from_name(const std::string& name);

// Line-delimited JSON, one record per line:
// {"scene_id":..,"node_index":..,"score":..,"truth":..,"violation":".."}
std::string records_to_jsonl(const std::vector<OocRecord>& records);
std::vector<OocRecord> records_from_jsonl(const std::string& text);

}  // namespace gcrn

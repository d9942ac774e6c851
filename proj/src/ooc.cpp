#include "gcrn/ooc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace gcrn {

namespace {

using nlohmann::json;

constexpr double kProbFloor = 1e-12;

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double v : p) sum += v;
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ValidationError(std::string("kl_divergence: ") + name +
                          " does not sum to 1 (sum=" + std::to_string(sum) + ")");
  }
}

}  // namespace

ContextFreeClassifier ContextFreeClassifier::init(int num_classes,
                                                  int appearance_dim,
                                                  const std::vector<int>& hidden,
                                                  std::uint64_t seed) {
  ContextFreeClassifier c;
  c.model = MlpModel::init({appearance_dim + 11, hidden, num_classes}, seed);
  return c;
}

Matrix ContextFreeClassifier::predict(const SceneGraph& scene) const {
  return mlp_forward(model, repg_inputs(scene)).probs;
}

MlpTrainHistory train_context_free(ContextFreeClassifier& classifier,
                                   AdamWState& state,
                                   const std::vector<SceneGraph>& scenes,
                                   int epochs, std::uint64_t seed) {
  MlpTrainHistory history;
  if (epochs <= 0 || scenes.empty()) return history;

  std::vector<std::vector<int>> targets;
  targets.reserve(scenes.size());
  for (const SceneGraph& scene : scenes) targets.push_back(true_labels(scene));

  Rng rng(seed);
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  auto params = param_tensors(classifier.model);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      MlpForwardResult fwd =
          mlp_forward(classifier.model, repg_inputs(scenes[idx]));
      CrossEntropyResult ce = cross_entropy(fwd.probs, targets[idx]);
      loss_sum += ce.loss;
      MlpGradients grads =
          mlp_backward(classifier.model, fwd.cache, ce.grad_logits);
      adamw_step(params, param_tensors(grads), state);
    }
    history.epoch_losses.push_back(loss_sum / static_cast<double>(scenes.size()));
  }
  return history;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ShapeError("kl_divergence: length mismatch " + std::to_string(p.size()) +
                     " vs " + std::to_string(q.size()));
  }
  check_distribution(p, "p");
  check_distribution(q, "q");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    sum += p[i] * (std::log(std::max(p[i], kProbFloor)) -
                   std::log(std::max(q[i], kProbFloor)));
  }
  return std::max(sum, 0.0);
}

double ooc_score(std::span<const double> context_probs,
                 std::span<const double> free_probs, KlMode mode) {
  switch (mode) {
    case KlMode::kl_free_to_ctx:
      return kl_divergence(free_probs, context_probs);
    case KlMode::kl_ctx_to_free:
      return kl_divergence(context_probs, free_probs);
    case KlMode::symmetric:
      return kl_divergence(free_probs, context_probs) +
             kl_divergence(context_probs, free_probs);
  }
  throw ValidationError("ooc_score: unknown mode");
}

double softmax_confidence_baseline(std::span<const double> free_probs) {
  if (free_probs.empty()) {
    throw ValidationError("softmax_confidence_baseline: empty distribution");
  }
  return 1.0 - *std::max_element(free_probs.begin(), free_probs.end());
}

std::vector<bool> detect(const std::vector<OocRecord>& records,
                         double threshold) {
  std::vector<bool> flags(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    flags[i] = records[i].score > threshold;
  }
  return flags;
}

std::string violation_name(Violation v) {
  switch (v) {
    case Violation::none: return "none";
    case Violation::cooccurrence: return "cooccurrence";
    case Violation::size: return "size";
  }
  throw ValidationError("violation_name: unknown violation");
}

Violation violation_from_name(const std::string& name) {
  if (name == "none") return Violation::none;
  if (name == "cooccurrence") return Violation::cooccurrence;
  if (name == "size") return Violation::size;
  throw ValidationError("unknown violation kind: " + name);
}

std::string records_to_jsonl(const std::vector<OocRecord>& records) {
  std::string out;
  for (const OocRecord& r : records) {
    json line;
    line["scene_id"] = r.scene_id;
    line["node_index"] = r.node_index;
    line["score"] = r.score;
    line["truth"] = r.truth;
    line["violation"] = violation_name(r.violation);
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<OocRecord> records_from_jsonl(const std::string& text) {
  std::vector<OocRecord> records;
  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("records line " + std::to_string(line_no) + ": " +
                       e.what(), e.byte);
    } catch (const json::exception& e) {
      throw ParseError("records line " + std::to_string(line_no) + ": " +
                       e.what(), 0);
    }
    try {
      OocRecord r;
      r.scene_id = j.at("scene_id").get<std::int64_t>();
      r.node_index = j.at("node_index").get<int>();
      r.score = j.at("score").get<double>();
      r.truth = j.at("truth").get<bool>();
      r.violation = violation_from_name(j.at("violation").get<std::string>());
      records.push_back(r);
    } catch (const json::exception& e) {
      throw ValidationError("records line " + std::to_string(line_no) + ": " +
                            e.what());
    }
  }
  return records;
}

}  // namespace gcrn

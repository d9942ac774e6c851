#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gcrn/gcrn.hpp"
#include "gcrn/ingest.hpp"
#include "gcrn/metrics.hpp"
#include "gcrn/ooc.hpp"
#include "gcrn/synth.hpp"

namespace gcrn {

enum class EvalMode { oracle_labels, pred_labels };
enum class Method { gcrn, no_cong, softmax_confidence };

std::string eval_mode_name(EvalMode mode);
EvalMode eval_mode_from_name(const std::string& name);
std::string method_name(Method method);
Method method_from_name(const std::string& name);
std::string kl_mode_name(KlMode mode);
KlMode kl_mode_from_name(const std::string& name);

/// Every knob of the pipeline with its default. Parsed from a single JSON
/// config file; unknown keys are rejected by name.
struct ExperimentConfig {
  std::uint64_t seed = 42;

  // world
  int num_classes = 12;
  int num_groups = 2;
  int appearance_dim = 16;
  double noise_scale = 0.15;
  std::array<int, 2> scene_size_range = {3, 8};

  // data
  int num_train_scenes = 2000;
  int num_test_scenes = 500;
  double ooc_fraction = 0.5;
  double cooccurrence_weight = 0.68;
  double size_weight = 0.32;
  std::array<double, 2> size_scale_range = {2.0, 5.0};

  // model
  std::vector<int> hidden = {256, 128, 64, 64};
  std::vector<int> mlp_hidden = {64, 64};
  double learning_rate = 0.001;
  double weight_decay = 0.0;

  // training
  int pretrain_epochs = 5;
  int em_max_iterations = 10;
  double em_disagreement_threshold = 0.01;
  int em_inner_epochs = 1;
  int context_free_epochs = 20;

  // eval
  std::vector<EvalMode> modes = {EvalMode::oracle_labels, EvalMode::pred_labels};
  std::vector<Method> methods = {Method::gcrn, Method::no_cong,
                                 Method::softmax_confidence};
  KlMode kl_mode = KlMode::symmetric;
  double flip_rate = 0.1;  // label corruption emulating predicted labels

  GenConfig gen_config() const;
  AdamWHyper adamw_hyper() const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);

struct ScoreSet {
  EvalMode mode = EvalMode::oracle_labels;
  Method method = Method::gcrn;
  std::vector<OocRecord> records;
};

/// Scores every test node under each requested (mode, method) pair. In
/// pred-labels mode ConG's assumed labels are the ground truth corrupted at
/// flip_rate, standing in for an imperfect upstream classifier; the flips
/// applied are appended to *flip_manifest when given. The no-cong baseline
/// scores against `baseline_repg`, the supervised representation model that
/// never went through the alternating phase (required exactly when that
/// method is requested).
std::vector<ScoreSet> score_test_set(const Gcrn& gcrn,
                                     const ContextFreeClassifier& classifier,
                                     const GcnModel* baseline_repg,
                                     const std::vector<SceneGraph>& test_scenes,
                                     const std::vector<EvalMode>& modes,
                                     const std::vector<Method>& methods,
                                     KlMode kl_mode, double flip_rate,
                                     std::uint64_t seed,
                                     std::vector<LabelFlip>* flip_manifest =
                                         nullptr);

struct LabeledValue {
  std::string label;
  double value = 0.0;
};

struct AccuracyRow {
  std::string method;
  AccuracyReport report;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<double> pretrain_losses;
  EmHistory em_history;
  std::vector<double> context_free_losses;
  std::vector<LabeledValue> auc_by_method;     // oracle-labels mode
  std::vector<LabeledValue> auc_by_violation;  // gcrn, oracle-labels mode
  std::vector<LabeledValue> auc_by_mode;       // gcrn
  std::vector<AccuracyRow> accuracy;           // context-informed predictions
  std::vector<RocPoint> roc;                   // gcrn, oracle-labels mode
  std::vector<ScoreSet> scores;
  std::vector<LabelFlip> label_flips;          // pred-labels mode corruption
};

/// Fills auc_by_method/auc_by_violation/auc_by_mode/accuracy/roc from
/// report.scores and the models. baseline_repg may be null when the no-cong
/// method is not requested.
void compute_report_metrics(ExperimentReport& report, const Gcrn& gcrn,
                            const GcnModel* baseline_repg,
                            const std::vector<SceneGraph>& test_scenes);

/// Full pipeline: generate -> pretrain -> EM -> context-free classifier ->
/// score -> metrics. Deterministic in the config (seed included).
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string report_to_json(const ExperimentReport& report);
std::string report_to_text(const ExperimentReport& report);

/// Writes report.json, report.txt, roc.csv and one records_<mode>_<method>
/// .jsonl per score set into an existing directory.
void write_report_bundle(const ExperimentReport& report,
                         const std::string& out_dir);

}  // namespace gcrn

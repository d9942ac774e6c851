#include "gcrn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "gcrn/dataset_io.hpp"

namespace gcrn {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Seed streams for the pipeline stages.
constexpr std::uint64_t kStreamWorld = 101;
constexpr std::uint64_t kStreamModel = 102;
constexpr std::uint64_t kStreamPretrain = 103;
constexpr std::uint64_t kStreamEm = 104;
constexpr std::uint64_t kStreamContextFree = 105;
constexpr std::uint64_t kStreamCorrupt = 106;
constexpr std::uint64_t kStreamContextFreeTrain = 107;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return Rng::derive(seed, stream).next_u64();
}

void require_known_keys(const json& obj, const std::string& section,
                        std::initializer_list<const char*> known) {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(known.begin(), known.end(), [&](const char* k) {
          return key == k;
        }) == known.end()) {
      unknown.push_back(section.empty() ? key : section + "." + key);
    }
  }
  if (!unknown.empty()) {
    std::string joined;
    for (const std::string& k : unknown) {
      if (!joined.empty()) joined += ", ";
      joined += k;
    }
    throw ConfigError("unknown config keys: " + joined);
  }
}

template <typename T>
void read_into(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

}  // namespace

std::string eval_mode_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::oracle_labels: return "oracle-labels";
    case EvalMode::pred_labels: return "pred-labels";
  }
  throw ValidationError("unknown eval mode");
}

EvalMode eval_mode_from_name(const std::string& name) {
  if (name == "oracle-labels") return EvalMode::oracle_labels;
  if (name == "pred-labels") return EvalMode::pred_labels;
  throw ConfigError("unknown mode '" + name +
                    "' (expected oracle-labels or pred-labels)");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::gcrn: return "gcrn";
    case Method::no_cong: return "no-cong";
    case Method::softmax_confidence: return "softmax";
  }
  throw ValidationError("unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "gcrn") return Method::gcrn;
  if (name == "no-cong") return Method::no_cong;
  if (name == "softmax") return Method::softmax_confidence;
  throw ConfigError("unknown method '" + name +
                    "' (expected gcrn, no-cong or softmax)");
}

std::string kl_mode_name(KlMode mode) {
  switch (mode) {
    case KlMode::symmetric: return "sym";
    case KlMode::kl_free_to_ctx: return "free2ctx";
    case KlMode::kl_ctx_to_free: return "ctx2free";
  }
  throw ValidationError("unknown KL mode");
}

KlMode kl_mode_from_name(const std::string& name) {
  if (name == "sym") return KlMode::symmetric;
  if (name == "free2ctx") return KlMode::kl_free_to_ctx;
  if (name == "ctx2free") return KlMode::kl_ctx_to_free;
  throw ConfigError("unknown KL mode '" + name +
                    "' (expected sym, free2ctx or ctx2free)");
}

GenConfig ExperimentConfig::gen_config() const {
  GenConfig g;
  g.seed = seed;
  g.num_train_scenes = num_train_scenes;
  g.num_test_scenes = num_test_scenes;
  g.ooc_fraction = ooc_fraction;
  g.cooccurrence_weight = cooccurrence_weight;
  g.size_weight = size_weight;
  g.size_scale_range = size_scale_range;
  return g;
}

AdamWHyper ExperimentConfig::adamw_hyper() const {
  AdamWHyper h;
  h.lr = learning_rate;
  h.weight_decay = weight_decay;
  return h;
}

ExperimentConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level is not an object");
  require_known_keys(root, "",
                     {"seed", "world", "data", "model", "training", "eval"});

  ExperimentConfig config;
  read_into(root, "seed", config.seed);

  if (root.contains("world")) {
    const json& w = root.at("world");
    require_known_keys(w, "world",
                       {"num_classes", "num_groups", "appearance_dim",
                        "noise_scale", "scene_size_range"});
    read_into(w, "num_classes", config.num_classes);
    read_into(w, "num_groups", config.num_groups);
    read_into(w, "appearance_dim", config.appearance_dim);
    read_into(w, "noise_scale", config.noise_scale);
    read_into(w, "scene_size_range", config.scene_size_range);
  }
  if (root.contains("data")) {
    const json& d = root.at("data");
    require_known_keys(d, "data",
                       {"num_train_scenes", "num_test_scenes", "ooc_fraction",
                        "cooccurrence_weight", "size_weight",
                        "size_scale_range"});
    read_into(d, "num_train_scenes", config.num_train_scenes);
    read_into(d, "num_test_scenes", config.num_test_scenes);
    read_into(d, "ooc_fraction", config.ooc_fraction);
    read_into(d, "cooccurrence_weight", config.cooccurrence_weight);
    read_into(d, "size_weight", config.size_weight);
    read_into(d, "size_scale_range", config.size_scale_range);
  }
  if (root.contains("model")) {
    const json& m = root.at("model");
    require_known_keys(
        m, "model", {"hidden", "mlp_hidden", "learning_rate", "weight_decay"});
    read_into(m, "hidden", config.hidden);
    read_into(m, "mlp_hidden", config.mlp_hidden);
    read_into(m, "learning_rate", config.learning_rate);
    read_into(m, "weight_decay", config.weight_decay);
  }
  if (root.contains("training")) {
    const json& t = root.at("training");
    require_known_keys(t, "training",
                       {"pretrain_epochs", "em_max_iterations",
                        "em_disagreement_threshold", "em_inner_epochs",
                        "context_free_epochs"});
    read_into(t, "pretrain_epochs", config.pretrain_epochs);
    read_into(t, "em_max_iterations", config.em_max_iterations);
    read_into(t, "em_disagreement_threshold", config.em_disagreement_threshold);
    read_into(t, "em_inner_epochs", config.em_inner_epochs);
    read_into(t, "context_free_epochs", config.context_free_epochs);
  }
  if (root.contains("eval")) {
    const json& e = root.at("eval");
    require_known_keys(e, "eval", {"modes", "methods", "kl", "flip_rate"});
    try {
      if (e.contains("modes")) {
        config.modes.clear();
        for (const json& m : e.at("modes")) {
          config.modes.push_back(eval_mode_from_name(m.get<std::string>()));
        }
      }
      if (e.contains("methods")) {
        config.methods.clear();
        for (const json& m : e.at("methods")) {
          config.methods.push_back(method_from_name(m.get<std::string>()));
        }
      }
      if (e.contains("kl")) {
        config.kl_mode = kl_mode_from_name(e.at("kl").get<std::string>());
      }
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("config eval section: ") + ex.what());
    }
    read_into(e, "flip_rate", config.flip_rate);
  }
  return config;
}

std::string config_to_json(const ExperimentConfig& config) {
  ordered_json root;
  root["seed"] = config.seed;
  root["world"] = {{"num_classes", config.num_classes},
                   {"num_groups", config.num_groups},
                   {"appearance_dim", config.appearance_dim},
                   {"noise_scale", config.noise_scale},
                   {"scene_size_range", config.scene_size_range}};
  root["data"] = {{"num_train_scenes", config.num_train_scenes},
                  {"num_test_scenes", config.num_test_scenes},
                  {"ooc_fraction", config.ooc_fraction},
                  {"cooccurrence_weight", config.cooccurrence_weight},
                  {"size_weight", config.size_weight},
                  {"size_scale_range", config.size_scale_range}};
  root["model"] = {{"hidden", config.hidden},
                   {"mlp_hidden", config.mlp_hidden},
                   {"learning_rate", config.learning_rate},
                   {"weight_decay", config.weight_decay}};
  root["training"] = {
      {"pretrain_epochs", config.pretrain_epochs},
      {"em_max_iterations", config.em_max_iterations},
      {"em_disagreement_threshold", config.em_disagreement_threshold},
      {"em_inner_epochs", config.em_inner_epochs},
      {"context_free_epochs", config.context_free_epochs}};
  ordered_json modes = ordered_json::array();
  for (EvalMode m : config.modes) modes.push_back(eval_mode_name(m));
  ordered_json methods = ordered_json::array();
  for (Method m : config.methods) methods.push_back(method_name(m));
  root["eval"] = {{"modes", std::move(modes)},
                  {"methods", std::move(methods)},
                  {"kl", kl_mode_name(config.kl_mode)},
                  {"flip_rate", config.flip_rate}};
  return root.dump(2);
}

std::vector<ScoreSet> score_test_set(const Gcrn& gcrn,
                                     const ContextFreeClassifier& classifier,
                                     const GcnModel* baseline_repg,
                                     const std::vector<SceneGraph>& test_scenes,
                                     const std::vector<EvalMode>& modes,
                                     const std::vector<Method>& methods,
                                     KlMode kl_mode, double flip_rate,
                                     std::uint64_t seed,
                                     std::vector<LabelFlip>* flip_manifest) {
  const bool want_no_cong = std::find(methods.begin(), methods.end(),
                                      Method::no_cong) != methods.end();
  if (want_no_cong && baseline_repg == nullptr) {
    throw ValidationError("score_test_set: no-cong requested without a "
                          "baseline representation model");
  }
  std::vector<ScoreSet> sets;
  for (EvalMode mode : modes) {
    // In pred-labels mode the assumed labels come from a corrupted copy of
    // the scenes; truth flags always come from the originals.
    const std::vector<SceneGraph>* assumed_scenes = &test_scenes;
    std::vector<SceneGraph> corrupted;
    if (mode == EvalMode::pred_labels) {
      Rng rng(derive_seed(seed, kStreamCorrupt));
      CorruptResult result =
          corrupt_labels(test_scenes, flip_rate, gcrn.num_classes, rng);
      corrupted = std::move(result.scenes);
      if (flip_manifest) {
        flip_manifest->insert(flip_manifest->end(), result.manifest.begin(),
                              result.manifest.end());
      }
      assumed_scenes = &corrupted;
    }

    std::vector<ScoreSet> mode_sets;
    for (Method method : methods) {
      mode_sets.push_back({mode, method, {}});
    }

    for (std::size_t s = 0; s < test_scenes.size(); ++s) {
      const SceneGraph& scene = test_scenes[s];
      const Matrix free_probs = classifier.predict(scene);
      const Prediction pred =
          predict(gcrn, (*assumed_scenes)[s], LabelSource::ground_truth);
      Matrix baseline_probs;
      if (want_no_cong) {
        baseline_probs = gcn_forward(*baseline_repg, scene.adjacency_norm,
                                     repg_inputs(scene))
                             .probs;
      }

      for (std::size_t i = 0; i < scene.size(); ++i) {
        std::span<const double> free_row(free_probs.row_ptr(i),
                                         free_probs.cols);
        std::span<const double> ctx_row(pred.cong_probs.row_ptr(i),
                                        pred.cong_probs.cols);
        const std::span<const double> repg_row =
            want_no_cong ? std::span<const double>(baseline_probs.row_ptr(i),
                                                   baseline_probs.cols)
                         : std::span<const double>();
        for (ScoreSet& set : mode_sets) {
          OocRecord record;
          record.scene_id = scene.id;
          record.node_index = static_cast<int>(i);
          record.truth = scene.nodes[i].is_ooc_truth;
          record.violation = scene.nodes[i].violation;
          switch (set.method) {
            case Method::gcrn:
              record.score = ooc_score(ctx_row, free_row, kl_mode);
              break;
            case Method::no_cong:
              record.score = ooc_score(repg_row, free_row, kl_mode);
              break;
            case Method::softmax_confidence:
              record.score = softmax_confidence_baseline(free_row);
              break;
          }
          set.records.push_back(record);
        }
      }
    }
    for (ScoreSet& set : mode_sets) sets.push_back(std::move(set));
  }
  return sets;
}

namespace {

const ScoreSet* find_set(const std::vector<ScoreSet>& sets, EvalMode mode,
                         Method method) {
  for (const ScoreSet& set : sets) {
    if (set.mode == mode && set.method == method) return &set;
  }
  return nullptr;
}

std::vector<OocRecord> filter_violation(const std::vector<OocRecord>& records,
                                        Violation kind) {
  // Keeps every negative and the positives of one violation kind.
  std::vector<OocRecord> out;
  for (const OocRecord& r : records) {
    if (!r.truth || r.violation == kind) out.push_back(r);
  }
  return out;
}

}  // namespace

void compute_report_metrics(ExperimentReport& report, const Gcrn& gcrn,
                            const GcnModel* baseline_repg,
                            const std::vector<SceneGraph>& test_scenes) {
  const ExperimentConfig& config = report.config;
  report.auc_by_method.clear();
  report.auc_by_violation.clear();
  report.auc_by_mode.clear();
  report.accuracy.clear();
  report.roc.clear();

  for (Method method : config.methods) {
    if (const ScoreSet* set =
            find_set(report.scores, EvalMode::oracle_labels, method)) {
      report.auc_by_method.push_back({method_name(method), auc(set->records)});
    }
  }

  if (const ScoreSet* set =
          find_set(report.scores, EvalMode::oracle_labels, Method::gcrn)) {
    for (Violation kind : {Violation::cooccurrence, Violation::size}) {
      const std::vector<OocRecord> filtered =
          filter_violation(set->records, kind);
      const bool has_positive =
          std::any_of(filtered.begin(), filtered.end(),
                      [](const OocRecord& r) { return r.truth; });
      if (has_positive) {
        report.auc_by_violation.push_back(
            {violation_name(kind), auc(filtered)});
      }
    }
    report.roc = roc_curve(set->records);
  }

  for (EvalMode mode : config.modes) {
    if (const ScoreSet* set = find_set(report.scores, mode, Method::gcrn)) {
      report.auc_by_mode.push_back({eval_mode_name(mode), auc(set->records)});
    }
  }

  const bool want_gcrn = std::find(config.methods.begin(), config.methods.end(),
                                   Method::gcrn) != config.methods.end();
  const bool want_no_cong =
      std::find(config.methods.begin(), config.methods.end(),
                Method::no_cong) != config.methods.end();
  std::vector<int> cong_predictions;
  std::vector<int> baseline_predictions;
  std::vector<int> truth;
  std::vector<bool> flags;
  for (const SceneGraph& scene : test_scenes) {
    if (want_gcrn) {
      const Prediction pred = predict(gcrn, scene, LabelSource::ground_truth);
      const std::vector<int> cong_argmax = argmax_rows(pred.cong_probs);
      cong_predictions.insert(cong_predictions.end(), cong_argmax.begin(),
                              cong_argmax.end());
    }
    if (want_no_cong && baseline_repg != nullptr) {
      const Matrix probs = gcn_forward(*baseline_repg, scene.adjacency_norm,
                                       repg_inputs(scene))
                               .probs;
      const std::vector<int> baseline_argmax = argmax_rows(probs);
      baseline_predictions.insert(baseline_predictions.end(),
                                  baseline_argmax.begin(),
                                  baseline_argmax.end());
    }
    for (std::size_t i = 0; i < scene.size(); ++i) {
      truth.push_back(*scene.nodes[i].label);
      flags.push_back(scene.nodes[i].is_ooc_truth);
    }
  }
  if (want_gcrn) {
    report.accuracy.push_back(
        {"gcrn", accuracy_report(cong_predictions, truth, flags)});
  }
  if (want_no_cong && baseline_repg != nullptr) {
    report.accuracy.push_back(
        {"no-cong", accuracy_report(baseline_predictions, truth, flags)});
  }
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config;

  const WorldModel world = [&] {
    WorldModel w = generate_world(config.num_classes, config.num_groups,
                                  config.appearance_dim,
                                  derive_seed(config.seed, kStreamWorld));
    w.noise_scale = config.noise_scale;
    w.scene_size_range = config.scene_size_range;
    return w;
  }();
  const Dataset dataset = generate_dataset(world, config.gen_config());

  Gcrn gcrn = Gcrn::init(config.num_classes, config.appearance_dim,
                         config.hidden, derive_seed(config.seed, kStreamModel));
  AdamWState repg_state =
      AdamWState::for_tensors(param_tensors(gcrn.repg), config.adamw_hyper());
  AdamWState cong_state =
      AdamWState::for_tensors(param_tensors(gcrn.cong), config.adamw_hyper());

  report.pretrain_losses =
      pretrain_repg(gcrn, repg_state, dataset.train, config.pretrain_epochs,
                    derive_seed(config.seed, kStreamPretrain))
          .epoch_losses;

  // The no-cong baseline is the supervised representation model as it
  // stands before the alternating phase: the same pipeline with the context
  // graph deleted.
  const GcnModel baseline_repg = gcrn.repg;

  EmOptions em_options;
  em_options.max_iterations = config.em_max_iterations;
  em_options.disagreement_threshold = config.em_disagreement_threshold;
  em_options.inner_epochs = config.em_inner_epochs;
  em_options.seed = derive_seed(config.seed, kStreamEm);
  report.em_history =
      em_train(gcrn, repg_state, cong_state, dataset.train, em_options);

  ContextFreeClassifier classifier = ContextFreeClassifier::init(
      config.num_classes, config.appearance_dim, config.mlp_hidden,
      derive_seed(config.seed, kStreamContextFree));
  AdamWState classifier_state = AdamWState::for_tensors(
      param_tensors(classifier.model), config.adamw_hyper());
  report.context_free_losses =
      train_context_free(classifier, classifier_state, dataset.train,
                         config.context_free_epochs,
                         derive_seed(config.seed, kStreamContextFreeTrain))
          .epoch_losses;

  report.scores = score_test_set(gcrn, classifier, &baseline_repg,
                                 dataset.test, config.modes, config.methods,
                                 config.kl_mode, config.flip_rate, config.seed,
                                 &report.label_flips);
  compute_report_metrics(report, gcrn, &baseline_repg, dataset.test);
  return report;
}

namespace {

ordered_json labeled_values_to_json(const std::vector<LabeledValue>& values) {
  ordered_json obj;
  for (const LabeledValue& v : values) obj[v.label] = v.value;
  return obj;
}

ordered_json accuracy_to_json(const AccuracyReport& report) {
  ordered_json obj;
  obj["ooc"] = report.ooc_accuracy ? ordered_json(*report.ooc_accuracy)
                                   : ordered_json();
  obj["non_ooc"] = report.non_ooc_accuracy
                       ? ordered_json(*report.non_ooc_accuracy)
                       : ordered_json();
  obj["overall"] = report.overall_accuracy;
  return obj;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  ordered_json root;
  root["config"] = json::parse(config_to_json(report.config));
  root["pretrain_losses"] = report.pretrain_losses;
  ordered_json em = ordered_json::array();
  for (const EmIterationRecord& rec : report.em_history) {
    em.push_back({{"iteration", rec.iteration},
                  {"repg_loss", rec.repg_loss},
                  {"cong_loss", rec.cong_loss},
                  {"disagreement", rec.disagreement}});
  }
  root["em_history"] = std::move(em);
  root["context_free_losses"] = report.context_free_losses;
  root["auc_by_method"] = labeled_values_to_json(report.auc_by_method);
  root["auc_by_violation"] = labeled_values_to_json(report.auc_by_violation);
  root["auc_by_mode"] = labeled_values_to_json(report.auc_by_mode);
  ordered_json accuracy;
  for (const AccuracyRow& row : report.accuracy) {
    accuracy[row.method] = accuracy_to_json(row.report);
  }
  root["accuracy"] = std::move(accuracy);
  return root.dump(2);
}

std::string report_to_text(const ExperimentReport& report) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;

  out << "== OOC detection AUC (oracle-labels) ==\n";
  for (const LabeledValue& v : report.auc_by_method) {
    out << "  " << v.label << ": " << v.value << '\n';
  }
  out << "== AUC by violation kind (gcrn) ==\n";
  for (const LabeledValue& v : report.auc_by_violation) {
    out << "  " << v.label << ": " << v.value << '\n';
  }
  out << "== AUC by label mode (gcrn) ==\n";
  for (const LabeledValue& v : report.auc_by_mode) {
    out << "  " << v.label << ": " << v.value << '\n';
  }
  out << "== Classification accuracy (OOC / non-OOC / overall) ==\n";
  for (const AccuracyRow& row : report.accuracy) {
    out << "  " << row.method << ": ";
    if (row.report.ooc_accuracy) out << *row.report.ooc_accuracy;
    else out << "n/a";
    out << " / ";
    if (row.report.non_ooc_accuracy) out << *row.report.non_ooc_accuracy;
    else out << "n/a";
    out << " / " << row.report.overall_accuracy << '\n';
  }
  out << "== EM iterations ==\n";
  for (const EmIterationRecord& rec : report.em_history) {
    out << "  iter " << rec.iteration << ": cong_loss=" << rec.cong_loss
        << " repg_loss=" << rec.repg_loss
        << " disagreement=" << rec.disagreement << '\n';
  }
  return out.str();
}

void write_report_bundle(const ExperimentReport& report,
                         const std::string& out_dir) {
  write_file(out_dir + "/report.json", report_to_json(report));
  write_file(out_dir + "/report.txt", report_to_text(report));
  write_file(out_dir + "/roc.csv", roc_to_csv(report.roc));
  for (const ScoreSet& set : report.scores) {
    write_file(out_dir + "/records_" + eval_mode_name(set.mode) + "_" +
                   method_name(set.method) + ".jsonl",
               records_to_jsonl(set.records));
  }
  const bool ran_pred_labels =
      std::find(report.config.modes.begin(), report.config.modes.end(),
                EvalMode::pred_labels) != report.config.modes.end();
  if (ran_pred_labels) {
    write_file(out_dir + "/flips_pred-labels.json",
               flip_manifest_to_json(report.label_flips));
  }
}

}  // namespace gcrn

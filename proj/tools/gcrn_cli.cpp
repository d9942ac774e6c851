// Command-line front end: dataset generation, training, scoring, reporting
// and annotation ingest. Exit codes: 0 success, 1 validation/config error,
// 2 I/O error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gcrn/checkpoint.hpp"
#include "gcrn/dataset_io.hpp"
#include "gcrn/experiment.hpp"
#include "gcrn/ingest.hpp"

namespace fs = std::filesystem;
using namespace gcrn;

namespace {

ExperimentConfig load_config(const std::string& path,
                             std::optional<std::uint64_t> seed_override) {
  ExperimentConfig config;
  if (!path.empty()) config = config_from_json(read_file(path));
  if (seed_override) config.seed = *seed_override;
  return config;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

WorldModel world_for_config(const ExperimentConfig& config) {
  WorldModel world = generate_world(config.num_classes, config.num_groups,
                                    config.appearance_dim,
                                    Rng::derive(config.seed, 101).next_u64());
  world.noise_scale = config.noise_scale;
  world.scene_size_range = config.scene_size_range;
  return world;
}

int run_gen(const std::string& config_path,
            std::optional<std::uint64_t> seed_override,
            const std::string& out_dir) {
  const ExperimentConfig config = load_config(config_path, seed_override);
  const WorldModel world = world_for_config(config);
  const Dataset dataset = generate_dataset(world, config.gen_config());
  ensure_dir(out_dir);
  write_file(out_dir + "/train.json", dataset_to_json(world, dataset.train));
  write_file(out_dir + "/test.json", dataset_to_json(world, dataset.test));
  write_file(out_dir + "/manifest.json", manifest_to_json(dataset.manifest));
  std::cerr << "wrote " << dataset.train.size() << " train and "
            << dataset.test.size() << " test scenes to " << out_dir << "\n";
  return 0;
}

int run_train(const std::string& config_path,
              std::optional<std::uint64_t> seed_override,
              const std::string& data_dir, const std::string& out_dir) {
  const ExperimentConfig config = load_config(config_path, seed_override);
  const ParsedDataset data = dataset_from_json(read_file(data_dir + "/train.json"));
  if (!data.world) {
    throw ValidationError("train.json has no world model; run gen or attach "
                          "one via ingest --world");
  }

  Gcrn gcrn = Gcrn::init(data.world->num_classes, data.world->appearance_dim,
                         config.hidden, Rng::derive(config.seed, 102).next_u64());
  AdamWState repg_state =
      AdamWState::for_tensors(param_tensors(gcrn.repg), config.adamw_hyper());
  AdamWState cong_state =
      AdamWState::for_tensors(param_tensors(gcrn.cong), config.adamw_hyper());

  std::cerr << "pretraining RepG for " << config.pretrain_epochs << " epochs\n";
  pretrain_repg(gcrn, repg_state, data.scenes, config.pretrain_epochs,
                Rng::derive(config.seed, 103).next_u64());
  const GcnModel baseline_repg = gcrn.repg;

  EmOptions em_options;
  em_options.max_iterations = config.em_max_iterations;
  em_options.disagreement_threshold = config.em_disagreement_threshold;
  em_options.inner_epochs = config.em_inner_epochs;
  em_options.seed = Rng::derive(config.seed, 104).next_u64();
  std::cerr << "alternating training (up to " << em_options.max_iterations
            << " iterations)\n";
  const EmHistory em_history =
      em_train(gcrn, repg_state, cong_state, data.scenes, em_options);
  for (const EmIterationRecord& rec : em_history) {
    std::cerr << "  iter " << rec.iteration
              << " disagreement=" << rec.disagreement << "\n";
  }

  ContextFreeClassifier classifier = ContextFreeClassifier::init(
      data.world->num_classes, data.world->appearance_dim, config.mlp_hidden,
      Rng::derive(config.seed, 105).next_u64());
  AdamWState classifier_state = AdamWState::for_tensors(
      param_tensors(classifier.model), config.adamw_hyper());
  std::cerr << "training context-free classifier for "
            << config.context_free_epochs << " epochs\n";
  train_context_free(classifier, classifier_state, data.scenes,
                     config.context_free_epochs,
                     Rng::derive(config.seed, 107).next_u64());

  ensure_dir(out_dir);
  save_gcrn(gcrn, out_dir + "/gcrn.json");
  write_file(out_dir + "/baseline_repg.json", gcn_to_checkpoint(baseline_repg));
  save_classifier(classifier, out_dir + "/context_free.json");
  std::cerr << "checkpoints written to " << out_dir << "\n";
  return 0;
}

int run_eval(const std::string& config_path,
             std::optional<std::uint64_t> seed_override,
             const std::string& data_dir, const std::string& models_dir,
             const std::vector<std::string>& mode_names,
             const std::vector<std::string>& method_names,
             const std::string& kl_name, const std::string& out_dir) {
  ExperimentConfig config = load_config(config_path, seed_override);
  if (!mode_names.empty()) {
    config.modes.clear();
    for (const std::string& m : mode_names) {
      config.modes.push_back(eval_mode_from_name(m));
    }
  }
  if (!method_names.empty()) {
    config.methods.clear();
    for (const std::string& m : method_names) {
      config.methods.push_back(method_from_name(m));
    }
  }
  if (!kl_name.empty()) config.kl_mode = kl_mode_from_name(kl_name);

  const ParsedDataset data = dataset_from_json(read_file(data_dir + "/test.json"));
  const Gcrn gcrn = load_gcrn(models_dir + "/gcrn.json");
  const ContextFreeClassifier classifier =
      load_classifier(models_dir + "/context_free.json");
  const GcnModel baseline_repg =
      gcn_from_checkpoint(read_file(models_dir + "/baseline_repg.json"));

  ExperimentReport report;
  report.config = config;
  report.scores =
      score_test_set(gcrn, classifier, &baseline_repg, data.scenes,
                     config.modes, config.methods, config.kl_mode,
                     config.flip_rate, config.seed, &report.label_flips);
  compute_report_metrics(report, gcrn, &baseline_repg, data.scenes);

  ensure_dir(out_dir);
  write_report_bundle(report, out_dir);
  std::cout << report_to_text(report);
  return 0;
}

int run_report(const std::string& records_path, const std::string& out_dir) {
  const std::vector<OocRecord> records =
      records_from_jsonl(read_file(records_path));
  const double records_auc = auc(records);
  const std::vector<RocPoint> curve = roc_curve(records);

  std::cout.precision(4);
  std::cout << std::fixed;
  std::cout << "records: " << records.size() << "\n";
  std::cout << "AUC: " << records_auc << "\n";
  for (Violation kind : {Violation::cooccurrence, Violation::size}) {
    std::vector<OocRecord> filtered;
    for (const OocRecord& r : records) {
      if (!r.truth || r.violation == kind) filtered.push_back(r);
    }
    const bool has_positive =
        std::any_of(filtered.begin(), filtered.end(),
                    [](const OocRecord& r) { return r.truth; });
    if (has_positive) {
      std::cout << "AUC (" << violation_name(kind) << "): " << auc(filtered)
                << "\n";
    }
  }

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_file(out_dir + "/roc.csv", roc_to_csv(curve));
    std::string json_out = "{\"auc\": " + std::to_string(records_auc) +
                           ", \"records\": " + std::to_string(records.size()) +
                           "}";
    write_file(out_dir + "/metrics.json", json_out);
    std::cerr << "wrote roc.csv and metrics.json to " << out_dir << "\n";
  }
  return 0;
}

int run_ingest(const std::string& input_path, const std::string& out_path,
               bool lenient, const std::string& world_path,
               std::optional<std::uint64_t> seed) {
  CocoParseOptions options;
  options.lenient = lenient;
  const CocoParseResult parsed =
      parse_coco_annotations(read_file(input_path), options);
  std::cerr << "parsed " << parsed.scenes.size() << " scenes ("
            << parsed.skipped_annotations << " annotations skipped)\n";

  std::vector<SceneGraph> scenes = parsed.scenes;
  std::optional<WorldModel> world;
  if (!world_path.empty()) {
    const ParsedDataset world_data = dataset_from_json(read_file(world_path));
    if (!world_data.world) {
      throw ValidationError(world_path + " carries no world model");
    }
    world = world_data.world;
    Rng rng(seed.value_or(0));
    attach_oracle_appearance(scenes, *world, rng);
  }

  write_file(out_path, world ? dataset_to_json(*world, scenes)
                             : dataset_to_json_worldless(scenes));
  write_file(out_path + ".remap.json", remap_to_json(parsed.category_remap));
  std::cerr << "wrote " << out_path << " and " << out_path << ".remap.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual graph-convolutional out-of-context object detection"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config");
    cmd->add_option("--seed", seed, "Override the config seed");
    cmd->add_option("--out", out_dir, "Output directory");
  };

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  add_common(gen);

  std::string data_dir = ".";
  CLI::App* train = app.add_subcommand("train", "Train GCRN and the "
                                                "context-free classifier");
  add_common(train);
  train->add_option("--data", data_dir, "Directory containing train.json")
      ->required();

  std::string models_dir;
  std::vector<std::string> mode_names;
  std::vector<std::string> method_names;
  std::string kl_name;
  CLI::App* eval = app.add_subcommand("eval", "Score a test set and emit "
                                              "records and metrics");
  add_common(eval);
  eval->add_option("--data", data_dir, "Directory containing test.json")
      ->required();
  eval->add_option("--models", models_dir, "Directory containing checkpoints")
      ->required();
  eval->add_option("--mode", mode_names, "oracle-labels or pred-labels")
      ->check(CLI::IsMember({"oracle-labels", "pred-labels"}));
  eval->add_option("--method", method_names, "gcrn, no-cong or softmax")
      ->check(CLI::IsMember({"gcrn", "no-cong", "softmax"}));
  eval->add_option("--kl", kl_name, "KL mode: sym, free2ctx or ctx2free")
      ->check(CLI::IsMember({"sym", "free2ctx", "ctx2free"}));

  std::string records_path;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "Summarize a records file");
  report->add_option("--records", records_path, "records .jsonl file")
      ->required();
  report->add_option("--out", report_out, "Directory for roc.csv/metrics.json");

  std::string input_path;
  std::string ingest_out = "dataset.json";
  std::string world_path;
  bool lenient = false;
  CLI::App* ingest = app.add_subcommand("ingest", "Convert COCO-style "
                                                  "annotations to the native "
                                                  "dataset format");
  ingest->add_option("--input", input_path, "COCO-style annotation JSON")
      ->required();
  ingest->add_option("--out", ingest_out, "Output dataset file");
  ingest->add_option("--world", world_path,
                     "Dataset file whose world supplies appearance features");
  ingest->add_option("--seed", seed, "Seed for appearance sampling");
  ingest->add_flag("--lenient", lenient,
                   "Skip (and count) invalid annotations instead of failing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_gen(config_path, seed, out_dir);
    if (train->parsed()) return run_train(config_path, seed, data_dir, out_dir);
    if (eval->parsed()) {
      return run_eval(config_path, seed, data_dir, models_dir, mode_names,
                      method_names, kl_name, out_dir);
    }
    if (report->parsed()) return run_report(records_path, report_out);
    if (ingest->parsed()) {
      return run_ingest(input_path, ingest_out, lenient, world_path, seed);
    }
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

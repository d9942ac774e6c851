#include <algorithm>
#include <filesystem>
#include <map>

#include "doctest.h"

#include "gcrn/dataset_io.hpp"
#include "gcrn/experiment.hpp"

using namespace gcrn;

namespace {

// Desk-scale configuration: narrow widths, few scenes, quick EM.
ExperimentConfig small_config() {
  ExperimentConfig config;
  config.seed = 71;
  config.num_classes = 6;
  config.num_groups = 2;
  config.appearance_dim = 8;
  config.num_train_scenes = 300;
  config.num_test_scenes = 320;
  config.hidden = {16, 12, 8, 8};
  config.mlp_hidden = {16, 16};
  config.em_max_iterations = 6;
  config.context_free_epochs = 10;
  return config;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config defaults survive an empty json object") {
  const ExperimentConfig config = config_from_json("{}");
  CHECK(config.seed == 42);
  CHECK(config.num_classes == 12);
  CHECK(config.num_groups == 2);
  CHECK(config.appearance_dim == 16);
  CHECK(config.num_train_scenes == 2000);
  CHECK(config.num_test_scenes == 500);
  CHECK(config.ooc_fraction == 0.5);
  CHECK(config.hidden == std::vector<int>{256, 128, 64, 64});
  CHECK(config.learning_rate == 0.001);
  CHECK(config.weight_decay == 0.0);
  CHECK(config.pretrain_epochs == 5);
  CHECK(config.em_max_iterations == 10);
  CHECK(config.kl_mode == KlMode::symmetric);
  CHECK(config.flip_rate == 0.1);
}

TEST_CASE("unknown config keys are rejected by name") {
  CHECK_THROWS_WITH_AS(config_from_json(R"({"sede": 1})"),
                       doctest::Contains("sede"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config_from_json(R"({"world": {"num_classs": 5}})"),
      doctest::Contains("world.num_classs"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config_from_json(R"({"training": {"epoch": 1, "momentum": 2}})"),
      doctest::Contains("training.epoch"), ConfigError);
}

TEST_CASE("config values parse from sections") {
  const ExperimentConfig config = config_from_json(R"({
    "seed": 9,
    "world": {"num_classes": 8, "noise_scale": 0.3},
    "data": {"num_train_scenes": 50},
    "model": {"hidden": [32, 16], "learning_rate": 0.01},
    "training": {"pretrain_epochs": 2},
    "eval": {"modes": ["oracle-labels"], "methods": ["gcrn"],
             "kl": "free2ctx", "flip_rate": 0.25}
  })");
  CHECK(config.seed == 9);
  CHECK(config.num_classes == 8);
  CHECK(config.noise_scale == 0.3);
  CHECK(config.num_train_scenes == 50);
  CHECK(config.hidden == std::vector<int>{32, 16});
  CHECK(config.learning_rate == 0.01);
  CHECK(config.pretrain_epochs == 2);
  CHECK(config.modes == std::vector<EvalMode>{EvalMode::oracle_labels});
  CHECK(config.methods == std::vector<Method>{Method::gcrn});
  CHECK(config.kl_mode == KlMode::kl_free_to_ctx);
  CHECK(config.flip_rate == 0.25);
}

TEST_CASE("bad enum names in the config are config errors") {
  CHECK_THROWS_AS(config_from_json(R"({"eval": {"modes": ["oracle"]}})"),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"eval": {"methods": ["kl"]}})"),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"eval": {"kl": "both"}})"),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json("[1,2]"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{"), ConfigError);
}

TEST_CASE("config round trips through json") {
  ExperimentConfig config = small_config();
  config.kl_mode = KlMode::kl_ctx_to_free;
  config.modes = {EvalMode::pred_labels};
  const ExperimentConfig loaded = config_from_json(config_to_json(config));
  CHECK(loaded.seed == config.seed);
  CHECK(loaded.num_classes == config.num_classes);
  CHECK(loaded.hidden == config.hidden);
  CHECK(loaded.kl_mode == config.kl_mode);
  CHECK(loaded.modes == config.modes);
  CHECK(loaded.noise_scale == config.noise_scale);
}

TEST_CASE("experiment report is byte-identical for a fixed seed") {
  ExperimentConfig config = small_config();
  config.num_train_scenes = 60;
  config.num_test_scenes = 40;
  config.em_max_iterations = 2;
  config.context_free_epochs = 4;
  const ExperimentReport a = run_experiment(config);
  const ExperimentReport b = run_experiment(config);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(roc_to_csv(a.roc) == roc_to_csv(b.roc));
}

TEST_CASE("disabling the baselines leaves the gcrn numbers untouched") {
  ExperimentConfig full = small_config();
  full.num_train_scenes = 60;
  full.num_test_scenes = 40;
  full.em_max_iterations = 2;
  full.context_free_epochs = 4;
  ExperimentConfig gcrn_only = full;
  gcrn_only.methods = {Method::gcrn};

  const ExperimentReport a = run_experiment(full);
  const ExperimentReport b = run_experiment(gcrn_only);

  auto find_value = [](const std::vector<LabeledValue>& values,
                       const std::string& label) {
    for (const LabeledValue& v : values) {
      if (v.label == label) return v.value;
    }
    FAIL("missing label ", label);
    return 0.0;
  };
  CHECK(find_value(a.auc_by_method, "gcrn") ==
        find_value(b.auc_by_method, "gcrn"));
  for (const LabeledValue& v : b.auc_by_violation) {
    CHECK(find_value(a.auc_by_violation, v.label) == v.value);
  }
  for (const LabeledValue& v : b.auc_by_mode) {
    CHECK(find_value(a.auc_by_mode, v.label) == v.value);
  }
  REQUIRE(!b.accuracy.empty());
  CHECK(b.accuracy[0].method == "gcrn");
  CHECK(a.accuracy[0].report.overall_accuracy ==
        b.accuracy[0].report.overall_accuracy);
  CHECK(roc_to_csv(a.roc) == roc_to_csv(b.roc));
  // The gcrn-only report carries no baseline rows at all.
  CHECK(b.auc_by_method.size() == 1);
  CHECK(b.accuracy.size() == 1);
}

TEST_CASE("desk-scale run reproduces the headline orderings") {
  const ExperimentReport report = run_experiment(small_config());

  std::map<std::string, double> by_method;
  for (const LabeledValue& v : report.auc_by_method) {
    by_method[v.label] = v.value;
  }
  REQUIRE(by_method.count("gcrn"));
  REQUIRE(by_method.count("no-cong"));
  REQUIRE(by_method.count("softmax"));
  CHECK(by_method["gcrn"] > by_method["no-cong"]);
  CHECK(by_method["gcrn"] > 0.8);

  std::map<std::string, double> by_mode;
  for (const LabeledValue& v : report.auc_by_mode) by_mode[v.label] = v.value;
  REQUIRE(by_mode.count("oracle-labels"));
  REQUIRE(by_mode.count("pred-labels"));
  CHECK(by_mode["oracle-labels"] >= by_mode["pred-labels"] - 0.02);

  REQUIRE(!report.accuracy.empty());
  const AccuracyReport& acc = report.accuracy[0].report;
  REQUIRE(acc.ooc_accuracy.has_value());
  REQUIRE(acc.non_ooc_accuracy.has_value());
  CHECK(*acc.non_ooc_accuracy > *acc.ooc_accuracy);

  CHECK(report.em_history.size() <= 6);
  CHECK(!report.pretrain_losses.empty());
}

TEST_CASE("an injected node outscores its scene's in-context median") {
  const ExperimentConfig config = small_config();

  // Rebuild the pipeline's data deterministically to pair scores by scene.
  WorldModel world = generate_world(config.num_classes, config.num_groups,
                                    config.appearance_dim,
                                    Rng::derive(config.seed, 101).next_u64());
  world.noise_scale = config.noise_scale;
  world.scene_size_range = config.scene_size_range;
  const Dataset data = generate_dataset(world, config.gen_config());

  const ExperimentReport report = run_experiment(config);
  const ScoreSet* set = nullptr;
  for (const ScoreSet& s : report.scores) {
    if (s.mode == EvalMode::oracle_labels && s.method == Method::gcrn) set = &s;
  }
  REQUIRE(set != nullptr);

  std::map<std::int64_t, std::vector<const OocRecord*>> by_scene;
  for (const OocRecord& r : set->records) by_scene[r.scene_id].push_back(&r);

  int ooc_scenes = 0;
  int above_median = 0;
  for (const auto& [scene_id, records] : by_scene) {
    const OocRecord* ooc = nullptr;
    std::vector<double> rest;
    for (const OocRecord* r : records) {
      if (r->truth && r->violation == Violation::cooccurrence) ooc = r;
      else if (!r->truth) rest.push_back(r->score);
    }
    if (ooc == nullptr || rest.size() < 2) continue;
    ++ooc_scenes;
    std::sort(rest.begin(), rest.end());
    const double median = rest[rest.size() / 2];
    if (ooc->score > median) ++above_median;
  }
  // Statistical assertion over at least 100 OOC scenes.
  REQUIRE(ooc_scenes >= 100);
  CHECK(static_cast<double>(above_median) / ooc_scenes > 0.8);
}

TEST_CASE("pred-labels mode changes only the context-informed scores") {
  ExperimentConfig config = small_config();
  config.num_train_scenes = 40;
  config.num_test_scenes = 30;
  config.em_max_iterations = 1;
  config.context_free_epochs = 2;
  config.flip_rate = 1.0;  // every assumed label wrong
  const ExperimentReport report = run_experiment(config);

  const ScoreSet* oracle_gcrn = nullptr;
  const ScoreSet* pred_gcrn = nullptr;
  const ScoreSet* oracle_softmax = nullptr;
  const ScoreSet* pred_softmax = nullptr;
  for (const ScoreSet& s : report.scores) {
    if (s.method == Method::gcrn && s.mode == EvalMode::oracle_labels)
      oracle_gcrn = &s;
    if (s.method == Method::gcrn && s.mode == EvalMode::pred_labels)
      pred_gcrn = &s;
    if (s.method == Method::softmax_confidence &&
        s.mode == EvalMode::oracle_labels)
      oracle_softmax = &s;
    if (s.method == Method::softmax_confidence &&
        s.mode == EvalMode::pred_labels)
      pred_softmax = &s;
  }
  REQUIRE(oracle_gcrn);
  REQUIRE(pred_gcrn);
  REQUIRE(oracle_softmax);
  REQUIRE(pred_softmax);

  bool gcrn_changed = false;
  for (std::size_t i = 0; i < oracle_gcrn->records.size(); ++i) {
    if (oracle_gcrn->records[i].score != pred_gcrn->records[i].score) {
      gcrn_changed = true;
    }
    // Truth flags come from the original scenes in both modes.
    CHECK(oracle_gcrn->records[i].truth == pred_gcrn->records[i].truth);
  }
  CHECK(gcrn_changed);
  for (std::size_t i = 0; i < oracle_softmax->records.size(); ++i) {
    CHECK(oracle_softmax->records[i].score == pred_softmax->records[i].score);
  }
}

TEST_CASE("the report bundle writes every artifact") {
  ExperimentConfig config = small_config();
  config.num_train_scenes = 40;
  config.num_test_scenes = 30;
  config.em_max_iterations = 1;
  config.context_free_epochs = 2;
  const ExperimentReport report = run_experiment(config);

  const std::string dir = "/tmp/gcrn_bundle_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_report_bundle(report, dir);

  for (const char* name :
       {"report.json", "report.txt", "roc.csv", "flips_pred-labels.json",
        "records_oracle-labels_gcrn.jsonl", "records_pred-labels_softmax.jsonl"}) {
    CHECK(std::filesystem::exists(dir + "/" + std::string(name)));
  }
  // The records files parse back into the same number of records.
  const auto parsed = records_from_jsonl(
      read_file(dir + "/records_oracle-labels_gcrn.jsonl"));
  const ScoreSet* set = nullptr;
  for (const ScoreSet& s : report.scores) {
    if (s.mode == EvalMode::oracle_labels && s.method == Method::gcrn) set = &s;
  }
  REQUIRE(set != nullptr);
  CHECK(parsed.size() == set->records.size());
  // The flip manifest reflects the pred-labels corruption at the default rate.
  CHECK(!report.label_flips.empty());
}

TEST_CASE("score_test_set requires the baseline when no-cong is requested") {
  const Gcrn gcrn = Gcrn::init(4, 4, {8}, 1);
  const ContextFreeClassifier classifier =
      ContextFreeClassifier::init(4, 4, {8}, 2);
  CHECK_THROWS_AS(score_test_set(gcrn, classifier, nullptr, {},
                                 {EvalMode::oracle_labels}, {Method::no_cong},
                                 KlMode::symmetric, 0.1, 1),
                  ValidationError);
}

}  // TEST_SUITE

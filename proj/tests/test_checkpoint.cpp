#include <string>

#include "doctest.h"

#include "gcrn/checkpoint.hpp"
#include "gcrn/synth.hpp"
#include "support.hpp"

using namespace gcrn;
using namespace gcrn::testsupport;

namespace {

bool stacks_equal(GcnModel& a, GcnModel& b) {
  auto ta = param_tensors(a);
  auto tb = param_tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t t = 0; t < ta.size(); ++t) {
    if (ta[t].size != tb[t].size) return false;
    for (std::size_t i = 0; i < ta[t].size; ++i) {
      if (ta[t].data[i] != tb[t].data[i]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("gcn checkpoint round trip is value-exact") {
  GcnModel model = GcnModel::init({7, {8, 6, 5, 5}, 4}, 11);
  GcnModel loaded = gcn_from_checkpoint(gcn_to_checkpoint(model));
  CHECK(stacks_equal(model, loaded));
  CHECK(loaded.config.hidden == model.config.hidden);
}

TEST_CASE("mlp checkpoint round trip is value-exact") {
  MlpModel model = MlpModel::init({9, {6, 6}, 3}, 13);
  MlpModel loaded = mlp_from_checkpoint(mlp_to_checkpoint(model));
  auto ta = param_tensors(model);
  auto tb = param_tensors(loaded);
  REQUIRE(ta.size() == tb.size());
  for (std::size_t t = 0; t < ta.size(); ++t) {
    for (std::size_t i = 0; i < ta[t].size; ++i) {
      CHECK(ta[t].data[i] == tb[t].data[i]);
    }
  }
}

TEST_CASE("gcrn checkpoint embeds both models and metadata") {
  Gcrn gcrn = Gcrn::init(6, 5, {8, 6}, 17);
  gcrn.repg_pretrained = true;
  Gcrn loaded = gcrn_from_checkpoint(gcrn_to_checkpoint(gcrn));
  CHECK(loaded.num_classes == 6);
  CHECK(loaded.appearance_dim == 5);
  CHECK(loaded.repg_pretrained);
  CHECK(stacks_equal(gcrn.repg, loaded.repg));
  CHECK(stacks_equal(gcrn.cong, loaded.cong));
}

TEST_CASE("truncated checkpoints raise a truncation error") {
  const std::string full = gcn_to_checkpoint(GcnModel::init({4, {5}, 3}, 1));
  for (std::size_t cut : {full.size() / 2, full.size() - 1, std::size_t{3}}) {
    CHECK_THROWS_AS(gcn_from_checkpoint(full.substr(0, cut)),
                    CheckpointTruncatedError);
  }
}

TEST_CASE("version mismatches are rejected distinctly") {
  std::string text = gcn_to_checkpoint(GcnModel::init({4, {5}, 3}, 2));
  const std::string needle = "\"version\":1";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "\"version\":2");
  CHECK_THROWS_AS(gcn_from_checkpoint(text), CheckpointVersionError);
}

TEST_CASE("kind mismatches are rejected") {
  const std::string text = mlp_to_checkpoint(MlpModel::init({4, {5}, 3}, 3));
  CHECK_THROWS_AS(gcn_from_checkpoint(text), ValidationError);
}

TEST_CASE("dimension-incompatible payloads are rejected") {
  std::string text = gcn_to_checkpoint(GcnModel::init({4, {5}, 3}, 4));
  // Declare a different input width than the stored weight matrices.
  const std::string needle = "\"input_dim\":4";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "\"input_dim\":6");
  CHECK_THROWS_AS(gcn_from_checkpoint(text), ShapeError);
}

TEST_CASE("gcrn loader rejects inconsistent metadata") {
  Gcrn gcrn = Gcrn::init(6, 5, {8}, 19);
  std::string text = gcrn_to_checkpoint(gcrn);
  const std::string needle = "\"appearance_dim\":5";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "\"appearance_dim\":9");
  CHECK_THROWS_AS(gcrn_from_checkpoint(text), ShapeError);
}

TEST_CASE("a round-tripped model predicts identically after training") {
  const WorldModel world = generate_world(5, 2, 5, 21);
  GenConfig config;
  config.seed = 23;
  config.num_train_scenes = 15;
  config.num_test_scenes = 1;
  const Dataset data = generate_dataset(world, config);

  Gcrn gcrn = Gcrn::init(5, 5, {12, 8}, 25);
  AdamWState repg_state = AdamWState::for_tensors(param_tensors(gcrn.repg), {});
  AdamWState cong_state = AdamWState::for_tensors(param_tensors(gcrn.cong), {});
  pretrain_repg(gcrn, repg_state, data.train, 2, 3);
  EmOptions options;
  options.max_iterations = 2;
  options.seed = 5;
  em_train(gcrn, repg_state, cong_state, data.train, options);

  Gcrn loaded = gcrn_from_checkpoint(gcrn_to_checkpoint(gcrn));
  const Prediction a = predict(gcrn, data.test[0], LabelSource::ground_truth);
  const Prediction b = predict(loaded, data.test[0], LabelSource::ground_truth);
  CHECK(max_abs_diff(a.repg_probs, b.repg_probs) == 0.0);
  CHECK(max_abs_diff(a.cong_probs, b.cong_probs) == 0.0);
}

TEST_CASE("file level save and load round trips") {
  Gcrn gcrn = Gcrn::init(4, 3, {6}, 27);
  const std::string path = "/tmp/gcrn_checkpoint_test.json";
  save_gcrn(gcrn, path);
  Gcrn loaded = load_gcrn(path);
  CHECK(stacks_equal(gcrn.repg, loaded.repg));
  CHECK_THROWS_AS(load_gcrn("/tmp/gcrn_missing_dir_xyz/file.json"), IoError);
}

}  // TEST_SUITE

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "gcrn/ooc.hpp"
#include "gcrn/synth.hpp"
#include "support.hpp"

using namespace gcrn;
using namespace gcrn::testsupport;

namespace {

std::vector<double> random_distribution(std::size_t k, Rng& rng) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (double& v : p) {
    v = rng.uniform(1e-6, 1.0);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

// Direct summation oracle, no flooring beyond what positivity guarantees.
double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) sum += p[i] * std::log(p[i] / q[i]);
  }
  return sum;
}

bool mlp_params_equal(MlpModel& a, MlpModel& b) {
  auto ta = param_tensors(a);
  auto tb = param_tensors(b);
  for (std::size_t t = 0; t < ta.size(); ++t) {
    for (std::size_t i = 0; i < ta[t].size; ++i) {
      if (ta[t].data[i] != tb[t].data[i]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("ooc") {

TEST_CASE("context-free training with zero epochs is a no-op") {
  const WorldModel world = generate_world(4, 2, 5, 9);
  GenConfig config;
  config.seed = 3;
  config.num_train_scenes = 5;
  const Dataset data = generate_dataset(world, config);

  ContextFreeClassifier c = ContextFreeClassifier::init(4, 5, {8, 8}, 1);
  ContextFreeClassifier before = c;
  AdamWState state = AdamWState::for_tensors(param_tensors(c.model), {});
  const MlpTrainHistory history =
      train_context_free(c, state, data.train, 0, 1);
  CHECK(history.epoch_losses.empty());
  CHECK(mlp_params_equal(c.model, before.model));
}

TEST_CASE("context-free classifier separates prototype classes") {
  const WorldModel world = generate_world(4, 2, 8, 11);
  GenConfig config;
  config.seed = 5;
  config.num_train_scenes = 60;
  const Dataset data = generate_dataset(world, config);

  ContextFreeClassifier c = ContextFreeClassifier::init(4, 8, {16, 16}, 2);
  AdamWState state = AdamWState::for_tensors(param_tensors(c.model), {});
  train_context_free(c, state, data.train, 20, 3);

  std::size_t correct = 0, total = 0;
  for (const SceneGraph& scene : data.train) {
    const std::vector<int> pred = argmax_rows(c.predict(scene));
    for (std::size_t i = 0; i < scene.size(); ++i) {
      ++total;
      if (pred[i] == *scene.nodes[i].label) ++correct;
    }
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(total) > 0.9);
}

TEST_CASE("context-free training requires labels") {
  const WorldModel world = generate_world(4, 2, 5, 13);
  GenConfig config;
  config.seed = 7;
  config.num_train_scenes = 3;
  Dataset data = generate_dataset(world, config);
  data.train[1].nodes[0].label.reset();

  ContextFreeClassifier c = ContextFreeClassifier::init(4, 5, {8}, 3);
  AdamWState state = AdamWState::for_tensors(param_tensors(c.model), {});
  CHECK_THROWS_AS(train_context_free(c, state, data.train, 1, 1),
                  ValidationError);
}

TEST_CASE("mlp equals a gcn run with identity adjacency on shared weights") {
  Rng rng(71);
  const MlpConfig config{7, {6, 5}, 4};
  MlpModel mlp = MlpModel::init(config, 21);
  GcnModel gcn = GcnModel::init({7, {6, 5}, 4}, 22);
  // Share every parameter tensor.
  gcn.layers = mlp.layers;
  gcn.head_weight = mlp.head_weight;
  gcn.head_bias = mlp.head_bias;

  Matrix inputs(5, 7);
  for (double& v : inputs.data) v = rng.uniform(-2, 2);
  const Matrix mlp_probs = mlp_forward(mlp, inputs).probs;
  const Matrix gcn_probs =
      gcn_forward(gcn, Matrix::identity(5), inputs).probs;
  CHECK(max_abs_diff(mlp_probs, gcn_probs) == 0.0);
}

TEST_CASE("mlp gradients match finite differences") {
  Rng rng(73);
  int done = 0;
  while (done < 3) {
    Matrix inputs(4, 7);
    for (double& v : inputs.data) v = rng.uniform(-1.5, 1.5);
    const MlpModel model = MlpModel::init({7, {6, 6}, 4}, rng.next_u64());
    const auto targets = random_targets(4, 4, rng);
    const GradCheckResult res = mlp_gradient_check(model, inputs, targets);
    if (res.skipped_near_kink) continue;
    CHECK(res.checked > 100);
    CHECK(res.max_rel_error < 1e-4);
    ++done;
  }
}

TEST_CASE("kl divergence of identical distributions is zero") {
  Rng rng(75);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> p = random_distribution(6, rng);
    CHECK(kl_divergence(p, p) <= 1e-12);
  }
}

TEST_CASE("kl of [1,0] vs [0.5,0.5] is ln 2") {
  const std::vector<double> p{1.0, 0.0};
  const std::vector<double> q{0.5, 0.5};
  CHECK(kl_divergence(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("kl matches a direct summation oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.uniform_int(9);
    const std::vector<double> p = random_distribution(k, rng);
    const std::vector<double> q = random_distribution(k, rng);
    CHECK(std::abs(kl_divergence(p, q) - kl_oracle(p, q)) < 1e-12);
  }
}

TEST_CASE("kl is nonnegative and zero only at equality") {
  Rng rng(79);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.uniform_int(7);
    const std::vector<double> p = random_distribution(k, rng);
    const std::vector<double> q = random_distribution(k, rng);
    const double kl = kl_divergence(p, q);
    CHECK(kl >= 0.0);
    double tv = 0.0;
    for (std::size_t i = 0; i < k; ++i) tv += std::abs(p[i] - q[i]);
    if (tv > 1e-3) CHECK(kl > 0.0);
  }
}

TEST_CASE("kl rejects mismatched lengths and non-distributions") {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<double> q{0.2, 0.3, 0.5};
  CHECK_THROWS_AS(kl_divergence(p, q), ShapeError);
  const std::vector<double> not_normalized{0.9, 0.3};
  CHECK_THROWS_AS(kl_divergence(p, not_normalized), ValidationError);
}

TEST_CASE("ooc score is zero for identical distributions in every mode") {
  Rng rng(81);
  const std::vector<double> p = random_distribution(5, rng);
  for (KlMode mode :
       {KlMode::kl_free_to_ctx, KlMode::kl_ctx_to_free, KlMode::symmetric}) {
    CHECK(ooc_score(p, p, mode) <= 1e-12);
  }
}

TEST_CASE("symmetric mode is exactly the sum of the one-sided modes") {
  Rng rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> ctx = random_distribution(6, rng);
    const std::vector<double> free = random_distribution(6, rng);
    CHECK(ooc_score(ctx, free, KlMode::symmetric) ==
          ooc_score(ctx, free, KlMode::kl_free_to_ctx) +
              ooc_score(ctx, free, KlMode::kl_ctx_to_free));
  }
}

TEST_CASE("ooc score is invariant to permuting both class axes") {
  Rng rng(85);

  SUBCASE("bitwise for two classes") {
    const std::vector<double> ctx = random_distribution(2, rng);
    const std::vector<double> free = random_distribution(2, rng);
    const std::vector<double> ctx_swapped{ctx[1], ctx[0]};
    const std::vector<double> free_swapped{free[1], free[0]};
    CHECK(ooc_score(ctx, free) == ooc_score(ctx_swapped, free_swapped));
  }

  SUBCASE("to rounding noise for larger alphabets") {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t k = 8;
      const std::vector<double> ctx = random_distribution(k, rng);
      const std::vector<double> free = random_distribution(k, rng);
      std::vector<std::size_t> perm(k);
      for (std::size_t i = 0; i < k; ++i) perm[i] = i;
      rng.shuffle(perm);
      std::vector<double> ctx_p(k), free_p(k);
      for (std::size_t i = 0; i < k; ++i) {
        ctx_p[i] = ctx[perm[i]];
        free_p[i] = free[perm[i]];
      }
      CHECK(ooc_score(ctx, free) ==
            doctest::Approx(ooc_score(ctx_p, free_p)).epsilon(1e-13));
    }
  }
}

TEST_CASE("detect flags strictly above the threshold") {
  std::vector<OocRecord> records;
  for (double s : {0.1, 0.5, 0.9, 0.5}) {
    OocRecord r;
    r.score = s;
    records.push_back(r);
  }
  SUBCASE("threshold above the max flags nothing") {
    const auto flags = detect(records, 1.0);
    CHECK(std::none_of(flags.begin(), flags.end(), [](bool f) { return f; }));
  }
  SUBCASE("negative threshold flags everything") {
    const auto flags = detect(records, -1.0);
    CHECK(std::all_of(flags.begin(), flags.end(), [](bool f) { return f; }));
  }
  SUBCASE("strictness at an exact score value") {
    const auto flags = detect(records, 0.5);
    CHECK(flags == std::vector<bool>{false, false, true, false});
  }
}

TEST_CASE("detect at the median matches a sort-based oracle") {
  Rng rng(87);
  std::vector<OocRecord> records(21);
  for (OocRecord& r : records) r.score = rng.uniform(0, 10);
  std::vector<double> sorted;
  for (const OocRecord& r : records) sorted.push_back(r.score);
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];

  const auto flags = detect(records, median);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(flags[i] == (records[i].score > median));
  }
}

TEST_CASE("raising the threshold never turns a flag on") {
  Rng rng(89);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<OocRecord> records(30);
    for (OocRecord& r : records) r.score = rng.uniform(0, 5);
    const double lo = rng.uniform(0, 5);
    const double hi = lo + rng.uniform(0, 5);
    const auto flags_lo = detect(records, lo);
    const auto flags_hi = detect(records, hi);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (flags_hi[i]) CHECK(flags_lo[i]);
    }
  }
}

TEST_CASE("softmax confidence baseline closed forms") {
  const std::vector<double> uniform(5, 0.2);
  CHECK(softmax_confidence_baseline(uniform) ==
        doctest::Approx(1.0 - 0.2).epsilon(1e-15));
  const std::vector<double> onehot{0.0, 1.0, 0.0};
  CHECK(softmax_confidence_baseline(onehot) == 0.0);
}

TEST_CASE("records survive a jsonl round trip") {
  std::vector<OocRecord> records;
  records.push_back({12, 0, 0.125, true, Violation::cooccurrence});
  records.push_back({12, 3, 3.75e-4, false, Violation::none});
  records.push_back({99, 1, 7.0, true, Violation::size});
  const std::string text = records_to_jsonl(records);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);

  const std::vector<OocRecord> parsed = records_from_jsonl(text);
  REQUIRE(parsed.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(parsed[i].scene_id == records[i].scene_id);
    CHECK(parsed[i].node_index == records[i].node_index);
    CHECK(parsed[i].score == records[i].score);
    CHECK(parsed[i].truth == records[i].truth);
    CHECK(parsed[i].violation == records[i].violation);
  }
}

TEST_CASE("records jsonl parse failures are structured") {
  CHECK_THROWS_AS(records_from_jsonl("{not json}\n"), ParseError);
  CHECK_THROWS_AS(records_from_jsonl("{\"scene_id\": 1}\n"), ValidationError);
}

}  // TEST_SUITE

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>

#include "doctest.h"
#include "mileaks/blackbox.hpp"
#include "mileaks/datasets.hpp"
#include "mileaks/defenses.hpp"
#include "testutil.hpp"

using namespace mileaks;
using testutil::all_indices;

namespace {

Dataset separable_blobs(std::size_t n, int c, std::size_t d,
                        std::uint64_t seed) {
  SyntheticSpec spec;
  spec.kind = SyntheticSpec::Kind::GaussianBlobs;
  spec.num_points = n;
  spec.num_classes = c;
  spec.dimensionality = d;
  spec.class_separation = 4.0;
  spec.noise = 0.05;
  spec.seed = seed;
  return generate(spec);
}

TrainConfig mlp_cfg(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.learner_kind = LearnerKind::Mlp;
  cfg.hidden_units = 16;
  cfg.epochs = 80;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.3;
  cfg.seed = seed;
  return cfg;
}

TrainConfig logistic_cfg(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.learner_kind = LearnerKind::Logistic;
  cfg.epochs = 120;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.3;
  cfg.seed = seed;
  return cfg;
}

std::vector<std::size_t> range(std::size_t from, std::size_t to) {
  std::vector<std::size_t> out;
  for (std::size_t i = from; i < to; ++i) out.push_back(i);
  return out;
}

}  // namespace

TEST_CASE("dropout preset defaults and validation") {
  const DropoutPreset preset = dropout_preset(0.5, 0.5);
  CHECK(preset.input == 0.5);
  CHECK(preset.hidden == 0.5);
  CHECK_NOTHROW(dropout_preset(0.75, 0.75));
  CHECK_THROWS_AS(dropout_preset(1.0, 0.5), ValidationError);
  CHECK_THROWS_AS(dropout_preset(0.5, -0.1), ValidationError);

  TrainConfig cfg = mlp_cfg(1);
  const TrainConfig defended = apply_dropout(cfg, preset);
  CHECK(defended.dropout_input == 0.5);
  CHECK(defended.dropout_hidden == 0.5);
  TrainConfig forest;
  forest.learner_kind = LearnerKind::Forest;
  CHECK_THROWS_AS(apply_dropout(forest, preset), ValidationError);
}

TEST_CASE("zero-ratio dropout trains bit-identically to undefended") {
  const Dataset data = separable_blobs(60, 3, 4, 2);
  const TrainConfig plain = mlp_cfg(3);
  const TrainConfig defended = apply_dropout(plain, dropout_preset(0.0, 0.0));
  const auto a = train(data, all_indices(60), plain);
  const auto b = train(data, all_indices(60), defended);
  CHECK(a->to_json() == b->to_json());
}

TEST_CASE("stacked training demands disjoint parts") {
  const Dataset data = separable_blobs(90, 3, 4, 4);
  const auto p1 = range(0, 30);
  const auto p2 = range(30, 60);
  const auto p3 = range(60, 90);
  const auto overlapping = range(25, 55);
  CHECK_THROWS_AS(train_stacked(data, p1, overlapping, p3, mlp_cfg(5),
                                mlp_cfg(6), logistic_cfg(7), 8),
                  ValidationError);
  CHECK_THROWS_AS(
      train_stacked(data, p1, p2, {}, mlp_cfg(5), mlp_cfg(6), logistic_cfg(7),
                    8),
      ValidationError);
}

TEST_CASE("stacked model wires meta over concatenated posteriors") {
  const Dataset data = separable_blobs(300, 4, 4, 9);
  TrainConfig forest_cfg;
  forest_cfg.learner_kind = LearnerKind::Forest;
  forest_cfg.trees = 8;
  forest_cfg.max_depth = 12;
  forest_cfg.seed = 10;
  const auto model =
      train_stacked(data, range(0, 100), range(100, 200), range(200, 300),
                    mlp_cfg(11), forest_cfg, logistic_cfg(12), 13);
  CHECK(model->input_dim() == 4);
  CHECK(model->num_classes() == 4);
  CHECK(model->meta().input_dim() == 8);  // 2c inputs

  // stacked prediction equals meta over the two base posteriors
  const auto& x = data.point(7).features;
  const auto p1 = model->base1().predict(x);
  const auto p2 = model->base2().predict(x);
  std::vector<double> concat(p1.probs());
  concat.insert(concat.end(), p2.probs().begin(), p2.probs().end());
  CHECK(stacked_predict(*model, x) == model->meta().predict(concat));
}

TEST_CASE("meta learns to follow an accurate base model") {
  const Dataset data = separable_blobs(300, 3, 4, 14);
  TrainConfig forest_cfg;
  forest_cfg.learner_kind = LearnerKind::Forest;
  forest_cfg.trees = 8;
  forest_cfg.max_depth = 12;
  forest_cfg.seed = 15;
  const auto model =
      train_stacked(data, range(0, 100), range(100, 200), range(200, 300),
                    mlp_cfg(16), forest_cfg, logistic_cfg(17), 18);
  std::size_t agree = 0;
  for (std::size_t i = 200; i < 300; ++i) {
    const auto& x = data.point(i).features;
    if (argmax_lowest(model->predict(x).probs()) ==
        argmax_lowest(model->base1().predict(x).probs()))
      ++agree;
  }
  CHECK(static_cast<double>(agree) / 100.0 >= 0.9);
}

TEST_CASE("a constant-uniform base still yields valid stacked posteriors") {
  const Dataset data = separable_blobs(200, 4, 4, 19);
  const auto trained =
      train_stacked(data, range(0, 60), range(60, 120), range(120, 200),
                    mlp_cfg(20), mlp_cfg(21), logistic_cfg(22), 23);
  // swap base2 for an untrained stub via serialization surgery
  NetState uniform(NetSpec{4, 0, 4}, std::vector<double>(4 * 4 + 4, 0.0));
  auto stub = std::make_unique<FeedForwardNet>(LearnerKind::Logistic, uniform);
  const StackedModel patched(Classifier::from_json(trained->base1().to_json()),
                             std::move(stub),
                             Classifier::from_json(trained->meta().to_json()));
  Rng rng(24);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    const auto p = patched.predict(x);
    double sum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) sum += p[k];
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("stacked models are deterministic, pure, and validated") {
  const Dataset data = separable_blobs(150, 3, 4, 25);
  const auto a =
      train_stacked(data, range(0, 50), range(50, 100), range(100, 150),
                    mlp_cfg(26), mlp_cfg(27), logistic_cfg(28), 29);
  const auto b =
      train_stacked(data, range(0, 50), range(50, 100), range(100, 150),
                    mlp_cfg(26), mlp_cfg(27), logistic_cfg(28), 29);
  CHECK(a->to_json() == b->to_json());

  const std::vector<double> x{0.2, 0.4, 0.6, 0.8};
  CHECK(a->predict(x) == a->predict(x));
  CHECK_THROWS_AS(a->predict(std::vector<double>{0.5}), ValidationError);
}

TEST_CASE("stacked models serve as drop-in black boxes") {
  const Dataset data = separable_blobs(150, 3, 4, 30);
  std::shared_ptr<const Predictor> model =
      train_stacked(data, range(0, 50), range(50, 100), range(100, 150),
                    mlp_cfg(31), mlp_cfg(32), logistic_cfg(33), 34);
  ModelBlackBox box(model);
  const auto p = box.query(data.point(0).features);
  CHECK(p.size() == 3);
  CHECK(box.query_count() == 1);
}

TEST_CASE("stacked model round-trips through its document form") {
  const Dataset data = separable_blobs(150, 3, 4, 35);
  auto model =
      train_stacked(data, range(0, 50), range(50, 100), range(100, 150),
                    mlp_cfg(36), mlp_cfg(37), logistic_cfg(38), 39);
  model->set_part_names({"t1", "t2", "t3"});
  model->save("stacked_roundtrip.json");
  const auto back = StackedModel::load("stacked_roundtrip.json");
  CHECK(back->part_names() == std::vector<std::string>{"t1", "t2", "t3"});
  Rng rng(40);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    CHECK(model->predict(x) == back->predict(x));
  }
  std::remove("stacked_roundtrip.json");
}

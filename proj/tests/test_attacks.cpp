#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mileaks/attacks.hpp"
#include "mileaks/datasets.hpp"
#include "mileaks/eval.hpp"
#include "testutil.hpp"

using namespace mileaks;
using testutil::FixedPredictor;
using testutil::LookupPredictor;

namespace {

Dataset small_blobs(std::size_t n, int c, std::size_t d, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.kind = SyntheticSpec::Kind::GaussianBlobs;
  spec.num_points = n;
  spec.num_classes = c;
  spec.dimensionality = d;
  spec.class_separation = 0.5;
  spec.noise = 0.3;
  spec.seed = seed;
  return generate(spec);
}

TrainConfig quick_mlp(std::uint64_t seed, int epochs = 60) {
  TrainConfig cfg;
  cfg.learner_kind = LearnerKind::Mlp;
  cfg.hidden_units = 16;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.3;
  cfg.seed = seed;
  return cfg;
}

// posterior [v, (1-v)/(c-1), ...]; feature[0] = v controls the maximum
class DialPredictor final : public Predictor {
 public:
  explicit DialPredictor(int c) : c_(c) {}
  PosteriorVector predict(std::span<const double> features) const override {
    validate_input(features, 1);
    const double v = features[0];
    std::vector<double> p(static_cast<std::size_t>(c_),
                          (1.0 - v) / static_cast<double>(c_ - 1));
    p[0] = v;
    return PosteriorVector(std::move(p));
  }
  std::size_t input_dim() const override { return 1; }
  int num_classes() const override { return c_; }

 private:
  int c_;
};

}  // namespace

TEST_CASE("extract_features sorts descending and truncates") {
  const PosteriorVector p({0.1, 0.7, 0.05, 0.15});
  CHECK(extract_features(p, 3).values == std::vector<double>{0.7, 0.15, 0.1});

  const PosteriorVector binary({0.3, 0.7});
  CHECK(extract_features(binary, 2).values == std::vector<double>{0.7, 0.3});

  const PosteriorVector uniform({0.2, 0.2, 0.2, 0.2, 0.2});
  CHECK(extract_features(uniform, 3).values ==
        std::vector<double>{0.2, 0.2, 0.2});

  CHECK(default_k(2) == 2);
  CHECK(default_k(3) == 3);
  CHECK(default_k(100) == 3);

  CHECK_THROWS_AS(extract_features(p, 0), ValidationError);
  CHECK_THROWS_AS(extract_features(p, 5), ValidationError);
}

TEST_CASE("extracted features are non-increasing on random posteriors") {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 2 + static_cast<int>(rng.below(8));
    std::vector<double> raw(static_cast<std::size_t>(c));
    for (double& v : raw) v = rng.uniform01() + 1e-6;
    const PosteriorVector p = renormalized(std::move(raw));
    const auto feats = extract_features(p, default_k(c));
    for (std::size_t i = 1; i < feats.values.size(); ++i) {
      CHECK(feats.values[i] <= feats.values[i - 1]);
      CHECK(feats.values[i] >= 0.0);
      CHECK(feats.values[i - 1] <= 1.0);
    }
  }
}

TEST_CASE("attack training set counts and labels") {
  const Dataset data = small_blobs(200, 4, 3, 1);
  std::map<std::string, std::vector<std::size_t>> parts;
  for (std::size_t i = 0; i < 50; ++i) parts["shadow_train"].push_back(i);
  for (std::size_t i = 50; i < 100; ++i) parts["shadow_out"].push_back(i);
  const SplitPlan plan(parts, data.size());

  LookupPredictor shadow(3, std::vector<double>(4, 0.25));
  for (std::size_t i = 0; i < 50; ++i)
    shadow.remember(data.point(i).features,
                    testutil::one_hot(data.point(i).label, 4));

  const auto rows = build_attack_training_set(shadow, data, plan, 3);
  REQUIRE(rows.size() == 100);
  std::size_t members = 0;
  for (const auto& row : rows)
    if (row.label == MembershipLabel::Member) ++members;
  CHECK(members == 50);
  // memorizing shadow: member rows start at 1, non-member rows at 1/c
  for (std::size_t i = 0; i < 50; ++i) CHECK(rows[i].values[0] == 1.0);
  for (std::size_t i = 50; i < 100; ++i) CHECK(rows[i].values[0] == 0.25);

  const auto again = build_attack_training_set(shadow, data, plan, 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].values == rows[i].values);
    CHECK(again[i].label == rows[i].label);
  }

  const SplitPlan missing({{"shadow_train", {0, 1}}}, data.size());
  CHECK_THROWS_AS(build_attack_training_set(shadow, data, missing, 3),
                  ValidationError);
}

TEST_CASE("attack decisions are self-consistent on the shadow's own points") {
  const Dataset data = small_blobs(120, 4, 3, 2);
  const SplitPlan plan = plan_standard_split(data, 3);
  const std::shared_ptr<const Classifier> shadow =
      train(data, plan.part("shadow_train"), quick_mlp(7));
  const auto rows = build_attack_training_set(*shadow, data, plan, 3);
  const auto attack = train_attack_model(rows, quick_mlp(8, 200));

  // the same model serves as the target: decisions over the shadow parts
  // must match the attack model's fit on its own training rows
  ModelBlackBox box(shadow);
  const auto outcome =
      infer_membership(*attack, box, data, plan.part("shadow_train"),
                       plan.part("shadow_out"), 3);
  REQUIRE(outcome.decisions.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto direct = attack->predict(rows[i].values);
    const auto expected = direct[1] >= 0.5 ? MembershipLabel::Member
                                           : MembershipLabel::NonMember;
    CHECK(outcome.decisions[i] == expected);
  }
  CHECK(outcome.queries_spent == rows.size());
}

TEST_CASE("adversary1 spends exactly one query per evaluation point") {
  const Dataset data = small_blobs(80, 3, 3, 4);
  const SplitPlan plan = plan_standard_split(data, 5);
  std::shared_ptr<const Predictor> target =
      train(data, plan.part("target_train"), quick_mlp(11));
  ModelBlackBox box(target);
  const auto outcome =
      adversary1(quick_mlp(12), quick_mlp(13, 150), data, plan, box);
  CHECK(outcome.queries_spent ==
        plan.part("target_train").size() + plan.part("target_out").size());
  CHECK(box.query_count() == outcome.queries_spent);
  CHECK(outcome.decisions.size() == outcome.truth.size());
}

TEST_CASE("combining with a single sub-config reduces to adversary1") {
  const Dataset data = small_blobs(96, 3, 3, 6);
  const SplitPlan plan = plan_standard_split(data, 7);
  std::shared_ptr<const Predictor> target =
      train(data, plan.part("target_train"), quick_mlp(14));

  ModelBlackBox box_a(target);
  const auto lone =
      adversary1(quick_mlp(15), quick_mlp(16, 150), data, plan, box_a);
  ModelBlackBox box_b(target);
  const TrainConfig subs[] = {quick_mlp(15)};
  const auto combined =
      combining_attack(subs, quick_mlp(16, 150), data, plan, box_b);
  CHECK(lone.decisions == combined.decisions);
  CHECK(lone.scores == combined.scores);
}

TEST_CASE("duplicate sub-shadow kinds warn but still run") {
  const Dataset data = small_blobs(96, 3, 3, 77);
  const SplitPlan plan = plan_standard_split(data, 78);
  std::shared_ptr<const Predictor> target =
      train(data, plan.part("target_train"), quick_mlp(79));
  ModelBlackBox box(target);
  const TrainConfig subs[] = {quick_mlp(80), quick_mlp(81)};
  CHECK_NOTHROW(combining_attack(subs, quick_mlp(82, 150), data, plan, box));
}

TEST_CASE("pooled single shadow reduces to adversary1") {
  const Dataset data = small_blobs(96, 3, 3, 61);
  const SplitPlan plan = plan_standard_split(data, 71);
  std::shared_ptr<const Predictor> target =
      train(data, plan.part("target_train"), quick_mlp(17));
  ModelBlackBox box_a(target);
  const auto lone =
      adversary1(quick_mlp(18), quick_mlp(19, 150), data, plan, box_a);
  ModelBlackBox box_b(target);
  const auto pooled = adversary1_pooled(quick_mlp(18), quick_mlp(19, 150),
                                        data, plan, box_b, 0, 1);
  CHECK(lone.decisions == pooled.decisions);
  CHECK(lone.scores == pooled.scores);

  ModelBlackBox box_c(target);
  CHECK_NOTHROW(adversary1_pooled(quick_mlp(18), quick_mlp(19, 150), data,
                                  plan, box_c, 0, 3));
  ModelBlackBox box_d(target);
  CHECK_THROWS_AS(adversary1_pooled(quick_mlp(18), quick_mlp(19, 150), data,
                                    plan, box_d, 0, 1000),
                  ValidationError);
}

TEST_CASE("three sub-shadows triple the attack training rows") {
  const Dataset data = small_blobs(100, 4, 3, 8);
  const SplitPlan plan = plan_standard_split(data, 9);
  std::vector<AttackRow> stacked;
  for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
    const auto shadow = train(data, plan.part("shadow_train"), quick_mlp(seed));
    const auto rows = build_attack_training_set(*shadow, data, plan, 3);
    stacked.insert(stacked.end(), rows.begin(), rows.end());
  }
  CHECK(stacked.size() == 3 * (plan.part("shadow_train").size() +
                               plan.part("shadow_out").size()));
}

TEST_CASE("adversary2 on the target's own dataset equals adversary1") {
  const Dataset data = small_blobs(120, 4, 3, 10);
  const SplitPlan plan = plan_standard_split(data, 11);
  std::shared_ptr<const Predictor> target =
      train(data, plan.part("target_train"), quick_mlp(24));
  ModelBlackBox box_a(target);
  const auto first =
      adversary1(quick_mlp(25), quick_mlp(26, 150), data, plan, box_a);
  ModelBlackBox box_b(target);
  const auto second = adversary2(data, plan, quick_mlp(25), quick_mlp(26, 150),
                                 data, plan, box_b);
  CHECK(first.decisions == second.decisions);
  CHECK(first.scores == second.scores);
  CHECK(first.queries_spent == second.queries_spent);
}

TEST_CASE("transfer attacks truncate to the smaller feature length") {
  // binary shadow (c = 2, k = 2) attacking a 5-class target
  const Dataset shadow_data = small_blobs(80, 2, 3, 12);
  const SplitPlan shadow_plan = plan_standard_split(shadow_data, 13);
  const Dataset target_data = small_blobs(80, 5, 3, 14);
  const SplitPlan target_plan = plan_standard_split(target_data, 15);
  std::shared_ptr<const Predictor> target =
      train(target_data, target_plan.part("target_train"), quick_mlp(27));
  ModelBlackBox box(target);
  const auto outcome =
      adversary2(shadow_data, shadow_plan, quick_mlp(28), quick_mlp(29, 150),
                 target_data, target_plan, box);
  const std::size_t eval_points = target_plan.part("target_train").size() +
                                  target_plan.part("target_out").size();
  CHECK(outcome.decisions.size() == eval_points);
  CHECK(outcome.queries_spent == eval_points);  // shadow training is free
}

TEST_CASE("posterior statistics match their closed forms") {
  const PosteriorVector one_hot({1.0, 0.0, 0.0, 0.0});
  CHECK(statistic(one_hot, StatKind::Max) == 1.0);
  CHECK(statistic(one_hot, StatKind::Entropy) == 0.0);
  CHECK(statistic(one_hot, StatKind::Std) ==
        doctest::Approx(std::sqrt(3.0 / 16.0)).epsilon(1e-12));

  const PosteriorVector uniform({0.25, 0.25, 0.25, 0.25});
  CHECK(statistic(uniform, StatKind::Max) == 0.25);
  CHECK(statistic(uniform, StatKind::Entropy) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(statistic(uniform, StatKind::Std) == 0.0);

  const PosteriorVector half({0.5, 0.5});
  CHECK(statistic(half, StatKind::Entropy) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("probe generation respects the feature space") {
  const auto binary = generate_probes({FeatureSpaceKind::Binary, 3}, 8, 5);
  REQUIRE(binary.size() == 8);
  for (const auto& probe : binary)
    for (double v : probe) CHECK((v == 0.0 || v == 1.0));

  const auto unit = generate_probes({FeatureSpaceKind::UnitInterval, 4}, 16, 5);
  for (const auto& probe : unit)
    for (double v : probe) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }

  CHECK(generate_probes({FeatureSpaceKind::Binary, 3}, 8, 5) == binary);
  CHECK_THROWS_AS(generate_probes({FeatureSpaceKind::Unbounded, 3}, 8, 5),
                  ValidationError);
}

TEST_CASE("threshold choosing takes the nearest-rank percentile") {
  std::shared_ptr<const Predictor> dial = std::make_shared<DialPredictor>(10);
  std::vector<std::vector<double>> probes;
  for (int i = 1; i <= 10; ++i)
    probes.push_back({static_cast<double>(i) / 10.0});

  ModelBlackBox box_a(dial);
  CHECK(choose_threshold(box_a, probes, 10.0).threshold ==
        doctest::Approx(0.9).epsilon(1e-12));
  CHECK(box_a.query_count() == 10);

  ModelBlackBox box_b(dial);
  CHECK(choose_threshold(box_b, probes, 50.0).threshold ==
        doctest::Approx(0.5).epsilon(1e-12));

  // constant maxima: uniform posterior target
  std::shared_ptr<const Predictor> uniform =
      std::make_shared<FixedPredictor>(1, std::vector<double>(4, 0.25));
  ModelBlackBox box_c(uniform);
  CHECK(choose_threshold(box_c, probes, 10.0).threshold == 0.25);

  ModelBlackBox box_d(dial);
  CHECK_THROWS_AS(choose_threshold(box_d, {}, 10.0), ValidationError);
  CHECK_THROWS_AS(choose_threshold(box_d, probes, 0.0), ValidationError);
  CHECK_THROWS_AS(choose_threshold(box_d, probes, 100.0), ValidationError);
}

TEST_CASE("adversary3 thresholds the statistic") {
  const Dataset data = small_blobs(40, 4, 3, 16);
  auto memorizer = std::make_shared<LookupPredictor>(
      3, std::vector<double>(4, 0.25));
  for (std::size_t i = 0; i < 20; ++i)
    memorizer->remember(data.point(i).features,
                        testutil::one_hot(data.point(i).label, 4));
  ModelBlackBox box(memorizer);

  std::vector<std::vector<double>> points;
  for (const auto& pt : data.points()) points.push_back(pt.features);

  const ThresholdRule rule{StatKind::Max, 0.99,
                           ThresholdRule::Direction::AboveMeansMember};
  const auto result = adversary3(box, rule, points);
  for (std::size_t i = 0; i < 20; ++i)
    CHECK(result.decisions[i] == MembershipLabel::Member);
  for (std::size_t i = 20; i < 40; ++i)
    CHECK(result.decisions[i] == MembershipLabel::NonMember);
  CHECK(box.query_count() == 40);
}

TEST_CASE("a zero threshold declares everything a member") {
  const Dataset data = small_blobs(40, 4, 3, 17);
  std::shared_ptr<const Predictor> uniform =
      std::make_shared<FixedPredictor>(3, std::vector<double>(4, 0.25));
  ModelBlackBox box(uniform);
  std::map<std::string, std::vector<std::size_t>> parts;
  for (std::size_t i = 0; i < 10; ++i) parts["target_train"].push_back(i);
  for (std::size_t i = 10; i < 40; ++i) parts["target_out"].push_back(i);
  const SplitPlan plan(parts, data.size());
  const ThresholdRule rule{StatKind::Max, 0.0,
                           ThresholdRule::Direction::AboveMeansMember};
  const auto outcome = adversary3_on_plan(box, rule, data,
                                          plan.part("target_train"),
                                          plan.part("target_out"));
  const auto pr = precision_recall(outcome.decisions, outcome.truth);
  CHECK(pr.recall == 1.0);
  CHECK(pr.precision == doctest::Approx(0.25));  // member fraction
}

TEST_CASE("decisions are invariant between adjacent order statistics") {
  const Dataset data = small_blobs(60, 4, 3, 18);
  const SplitPlan plan = plan_standard_split(data, 19);
  std::shared_ptr<const Predictor> target =
      train(data, plan.part("target_train"), quick_mlp(30));

  // collect the evaluated maxima, then perturb the threshold within a gap
  std::vector<double> maxima;
  for (const char* part : {"target_train", "target_out"})
    for (std::size_t idx : plan.part(part))
      maxima.push_back(
          statistic(target->predict(data.point(idx).features), StatKind::Max));
  std::sort(maxima.begin(), maxima.end());
  std::size_t gap = maxima.size() / 2;
  while (gap + 1 < maxima.size() && maxima[gap + 1] == maxima[gap]) ++gap;
  REQUIRE(gap + 1 < maxima.size());
  const double lo = maxima[gap];
  const double hi = maxima[gap + 1];

  const auto run_with = [&](double threshold) {
    ModelBlackBox box(target);
    const ThresholdRule rule{StatKind::Max, threshold,
                             ThresholdRule::Direction::AboveMeansMember};
    return adversary3_on_plan(box, rule, data, plan.part("target_train"),
                              plan.part("target_out"))
        .decisions;
  };
  // any threshold strictly inside (lo, hi] keeps every decision unchanged
  const auto base = run_with(std::nextafter(lo, hi));
  CHECK(run_with(lo + (hi - lo) / 2) == base);
  CHECK(run_with(hi) == base);
}

TEST_CASE("entropy direction flips the decision rule") {
  std::shared_ptr<const Predictor> uniform =
      std::make_shared<FixedPredictor>(2, std::vector<double>{0.5, 0.5});
  ModelBlackBox box(uniform);
  const std::vector<std::vector<double>> pts{{0.0, 0.0}};
  const double ln2 = std::log(2.0);

  const ThresholdRule below{StatKind::Entropy, ln2,
                            ThresholdRule::Direction::BelowMeansMember};
  CHECK(adversary3(box, below, pts).decisions[0] == MembershipLabel::Member);
  const ThresholdRule strict{StatKind::Entropy, ln2 / 2,
                             ThresholdRule::Direction::BelowMeansMember};
  CHECK(adversary3(box, strict, pts).decisions[0] ==
        MembershipLabel::NonMember);
  CHECK(default_direction(StatKind::Entropy) ==
        ThresholdRule::Direction::BelowMeansMember);
  CHECK(default_direction(StatKind::Max) ==
        ThresholdRule::Direction::AboveMeansMember);
}

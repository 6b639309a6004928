#pragma once

// Standardized synthetic scenarios shared by the integration and acceptance
// suites. OVERFIT memorizes 100 training points of a near-inseparable blob
// task; GENERALIZING trains briefly with weight decay on five times the
// data, landing near chance for any membership signal.

#include "mileaks/core.hpp"
#include "mileaks/datasets.hpp"
#include "mileaks/eval.hpp"

namespace scenario {

using namespace mileaks;

inline SyntheticSpec overfit_blobs() {
  SyntheticSpec spec;
  spec.kind = SyntheticSpec::Kind::GaussianBlobs;
  spec.num_points = 400;
  spec.num_classes = 10;
  spec.dimensionality = 16;
  spec.class_separation = 0.2;
  spec.noise = 0.35;
  spec.seed = 42;
  return spec;
}

inline SyntheticSpec generalizing_blobs() {
  SyntheticSpec spec = overfit_blobs();
  spec.num_points = 2000;
  return spec;
}

inline SyntheticSpec transfer_hypercube() {
  SyntheticSpec spec;
  spec.kind = SyntheticSpec::Kind::BinaryHypercube;
  spec.num_points = 400;
  spec.num_classes = 10;
  spec.dimensionality = 16;
  spec.noise = 0.3;
  spec.seed = 52;
  return spec;
}

inline constexpr std::uint64_t kSplitSeed = 11;
inline constexpr std::uint64_t kShadowSplitSeed = 13;
inline constexpr std::uint64_t kProbeSeed = 77;

inline TrainConfig overfit_target() {
  TrainConfig cfg;
  cfg.learner_kind = LearnerKind::Mlp;
  cfg.hidden_units = 128;
  cfg.epochs = 300;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.5;
  cfg.l2_lambda = 0.0;
  cfg.seed = 21;
  return cfg;
}

inline TrainConfig overfit_shadow() {
  TrainConfig cfg = overfit_target();
  cfg.seed = 31;
  return cfg;
}

inline TrainConfig generalizing_target() {
  TrainConfig cfg = overfit_target();
  cfg.epochs = 30;
  cfg.learning_rate = 0.1;
  cfg.l2_lambda = 1e-3;
  return cfg;
}

inline TrainConfig generalizing_shadow() {
  TrainConfig cfg = generalizing_target();
  cfg.seed = 31;
  return cfg;
}

// 64-unit attack model; a light weight penalty keeps it calibrated when the
// membership signal is weak.
inline TrainConfig attack_model() {
  TrainConfig cfg;
  cfg.learner_kind = LearnerKind::Mlp;
  cfg.hidden_units = 64;
  cfg.epochs = 500;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.05;
  cfg.l2_lambda = 1e-3;
  cfg.seed = 41;
  return cfg;
}

// The combining comparison trains the attack model to full convergence so
// both feature-set variants reach their respective optima.
inline TrainConfig attack_model_combining() {
  TrainConfig cfg = attack_model();
  cfg.epochs = 700;
  cfg.learning_rate = 0.1;
  return cfg;
}

inline TrainConfig logistic_sub_shadow() {
  TrainConfig cfg;
  cfg.learner_kind = LearnerKind::Logistic;
  cfg.epochs = 1000;
  cfg.batch_size = 8;
  cfg.learning_rate = 1.0;
  cfg.seed = 32;
  return cfg;
}

inline TrainConfig forest_sub_shadow() {
  TrainConfig cfg;
  cfg.learner_kind = LearnerKind::Forest;
  cfg.trees = 64;
  cfg.max_depth = 32;
  cfg.seed = 33;
  return cfg;
}

inline TrainConfig stacking_base1() {
  TrainConfig cfg = overfit_target();
  cfg.seed = 1;
  return cfg;
}

inline TrainConfig stacking_base2() {
  TrainConfig cfg;
  cfg.learner_kind = LearnerKind::Forest;
  cfg.trees = 32;
  cfg.max_depth = 32;
  cfg.seed = 2;
  return cfg;
}

inline TrainConfig stacking_meta() {
  TrainConfig cfg;
  cfg.learner_kind = LearnerKind::Logistic;
  cfg.epochs = 300;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.1;
  cfg.seed = 3;
  return cfg;
}

inline ExperimentSpec overfit_adv1_spec() {
  ExperimentSpec spec;
  spec.name = "overfit-adv1";
  spec.dataset.synthetic = overfit_blobs();
  spec.split_seed = kSplitSeed;
  spec.target = overfit_target();
  spec.adversary.kind = AdversarySpec::Kind::Adversary1;
  spec.adversary.shadow = overfit_shadow();
  spec.adversary.attack = attack_model();
  return spec;
}

inline ExperimentSpec generalizing_adv1_spec() {
  ExperimentSpec spec = overfit_adv1_spec();
  spec.name = "generalizing-adv1";
  spec.dataset.synthetic = generalizing_blobs();
  spec.target = generalizing_target();
  spec.adversary.shadow = generalizing_shadow();
  return spec;
}

}  // namespace scenario

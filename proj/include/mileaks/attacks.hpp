#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mileaks/blackbox.hpp"
#include "mileaks/core.hpp"
#include "mileaks/learners.hpp"

namespace mileaks {

// Number of posterior features the attack model consumes: two for binary
// targets, three otherwise.
std::size_t default_k(int num_classes);

struct AttackFeatureVector {
  std::vector<double> values;  // non-increasing, each in [0,1]
  std::optional<MembershipLabel> source;
};

// Top-k posteriors, sorted descending. The sort is stable: equal values
// keep the lower class index first.
AttackFeatureVector extract_features(const PosteriorVector& posteriors,
                                     std::size_t k);

struct AttackRow {
  std::vector<double> values;
  MembershipLabel label = MembershipLabel::NonMember;
};

// One labeled row per shadow point: member iff the point is in the part the
// shadow was trained on.
std::vector<AttackRow> attack_rows(const Predictor& shadow,
                                   const Dataset& data,
                                   std::span<const std::size_t> member_part,
                                   std::span<const std::size_t> nonmember_part,
                                   std::size_t k);

std::vector<AttackRow> build_attack_training_set(const Predictor& shadow,
                                                 const Dataset& data,
                                                 const SplitPlan& plan,
                                                 std::size_t k);

std::unique_ptr<Classifier> train_attack_model(
    const std::vector<AttackRow>& rows, const TrainConfig& attack_cfg);

// Decisions plus ground truth for one attack run. scores are the attack
// model's member-class posterior (supervised attacks) or the oriented
// statistic (adversary 3); higher always means more member-like.
struct AttackDecisions {
  std::vector<MembershipLabel> decisions;
  std::vector<double> scores;
  std::vector<MembershipLabel> truth;
  std::uint64_t queries_spent = 0;
};

// Queries the target once per evaluation point (members first, then
// non-members) and thresholds the attack model's member posterior at 0.5
// (ties decide member).
AttackDecisions infer_membership(const Classifier& attack_model,
                                 BlackBox& target, const Dataset& data,
                                 std::span<const std::size_t> member_part,
                                 std::span<const std::size_t> nonmember_part,
                                 std::size_t k);

// Adversary 1: one shadow model, one attack model, same-distribution shadow
// data. k = 0 picks the default; the posterior-count sweep passes 1..c.
AttackDecisions adversary1(const TrainConfig& shadow_cfg,
                           const TrainConfig& attack_cfg, const Dataset& data,
                           const SplitPlan& plan, BlackBox& target,
                           std::size_t k = 0);

// Shadow-count axis: num_shadows identically-configured shadows trained on
// disjoint contiguous slices of the shadow half (seeds derive as seed + i),
// their rows pooled into one attack training set. num_shadows = 1 is
// adversary1 exactly.
AttackDecisions adversary1_pooled(const TrainConfig& shadow_cfg,
                                  const TrainConfig& attack_cfg,
                                  const Dataset& data, const SplitPlan& plan,
                                  BlackBox& target, std::size_t k,
                                  int num_shadows);

// Combining attack: sub-shadows of different kinds trained on the same
// part; their rows are stacked into one attack training set.
AttackDecisions combining_attack(std::span<const TrainConfig> sub_cfgs,
                                 const TrainConfig& attack_cfg,
                                 const Dataset& data, const SplitPlan& plan,
                                 BlackBox& target, std::size_t k = 0);

// Adversary 2 (data transfer): the shadow lives on a foreign dataset; the
// attack feature length is the smaller of the two models' defaults.
AttackDecisions adversary2(const Dataset& shadow_data,
                           const SplitPlan& shadow_plan,
                           const TrainConfig& shadow_cfg,
                           const TrainConfig& attack_cfg,
                           const Dataset& target_data,
                           const SplitPlan& target_plan, BlackBox& target);

enum class StatKind { Max, Std, Entropy };

std::string to_string(StatKind kind);
StatKind stat_kind_from_string(const std::string& s);

// max = largest entry; std = population standard deviation over the c
// entries; entropy = -sum p ln p with 0 ln 0 = 0.
double statistic(const PosteriorVector& posteriors, StatKind kind);

// Uniform-[0,1] coordinates or fair-coin bits. Unbounded spaces have no
// usable bounds and are rejected.
std::vector<std::vector<double>> generate_probes(const FeatureSpaceSpec& space,
                                                 std::size_t n,
                                                 std::uint64_t seed);

struct ThresholdRule {
  StatKind statistic = StatKind::Max;
  double threshold = 0.0;
  enum class Direction {
    AboveMeansMember,  // max, std
    BelowMeansMember   // entropy
  } direction = Direction::AboveMeansMember;
};

ThresholdRule::Direction default_direction(StatKind kind);

// Queries the target on every probe and takes the nearest-rank (100-t)th
// percentile of the maximal posteriors as the member threshold.
ThresholdRule choose_threshold(BlackBox& target,
                               const std::vector<std::vector<double>>& probes,
                               double t_percent);

struct Adversary3Result {
  std::vector<MembershipLabel> decisions;
  std::vector<double> stats;  // raw statistic per point
};

// Training-free attack: member iff the statistic clears the threshold
// (>= for above-direction, <= for below). One query per point.
Adversary3Result adversary3(BlackBox& target, const ThresholdRule& rule,
                            std::span<const std::vector<double>> points);

AttackDecisions adversary3_on_plan(BlackBox& target, const ThresholdRule& rule,
                                   const Dataset& data,
                                   std::span<const std::size_t> member_part,
                                   std::span<const std::size_t> nonmember_part);

}  // namespace mileaks

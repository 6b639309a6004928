#include "mileaks/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>

#include "mileaks/rng.hpp"

namespace mileaks {

std::size_t default_k(int num_classes) {
  return num_classes == 2 ? 2 : 3;
}

AttackFeatureVector extract_features(const PosteriorVector& posteriors,
                                     std::size_t k) {
  const std::size_t c = posteriors.size();
  if (k < 1 || k > c)
    throw ValidationError("posterior feature count must be in [1, " +
                          std::to_string(c) + "]");
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return posteriors[a] > posteriors[b];
                   });
  AttackFeatureVector out;
  out.values.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.values.push_back(posteriors[order[i]]);
  return out;
}

std::vector<AttackRow> attack_rows(const Predictor& shadow,
                                   const Dataset& data,
                                   std::span<const std::size_t> member_part,
                                   std::span<const std::size_t> nonmember_part,
                                   std::size_t k) {
  std::vector<AttackRow> rows;
  rows.reserve(member_part.size() + nonmember_part.size());
  const auto add = [&](std::span<const std::size_t> part,
                       MembershipLabel label) {
    for (std::size_t idx : part) {
      AttackRow row;
      row.values =
          extract_features(shadow.predict(data.point(idx).features), k).values;
      row.label = label;
      rows.push_back(std::move(row));
    }
  };
  add(member_part, MembershipLabel::Member);
  add(nonmember_part, MembershipLabel::NonMember);
  return rows;
}

std::vector<AttackRow> build_attack_training_set(const Predictor& shadow,
                                                 const Dataset& data,
                                                 const SplitPlan& plan,
                                                 std::size_t k) {
  return attack_rows(shadow, data, plan.part("shadow_train"),
                     plan.part("shadow_out"), k);
}

std::unique_ptr<Classifier> train_attack_model(
    const std::vector<AttackRow>& rows, const TrainConfig& attack_cfg) {
  if (rows.empty()) throw ValidationError("attack training set is empty");
  const std::size_t k = rows.front().values.size();
  std::vector<LabeledPoint> points;
  points.reserve(rows.size());
  for (const AttackRow& row : rows) {
    if (row.values.size() != k)
      throw ValidationError("attack rows have mixed feature lengths");
    points.push_back({row.values, static_cast<int>(row.label)});
  }
  const Dataset attack_data(std::move(points), 2,
                            {FeatureSpaceKind::UnitInterval, k},
                            "attack_rows");
  std::vector<std::size_t> all(attack_data.size());
  std::iota(all.begin(), all.end(), 0);
  return train(attack_data, all, attack_cfg);
}

AttackDecisions infer_membership(const Classifier& attack_model,
                                 BlackBox& target, const Dataset& data,
                                 std::span<const std::size_t> member_part,
                                 std::span<const std::size_t> nonmember_part,
                                 std::size_t k) {
  if (attack_model.input_dim() != k)
    throw ValidationError("attack model consumes " +
                          std::to_string(attack_model.input_dim()) +
                          " features, pipeline provides " + std::to_string(k));
  AttackDecisions out;
  const std::uint64_t before = target.query_count();
  const auto decide = [&](std::span<const std::size_t> part,
                          MembershipLabel truth) {
    for (std::size_t idx : part) {
      const PosteriorVector target_posteriors =
          target.query(data.point(idx).features);
      const auto features = extract_features(target_posteriors, k);
      const PosteriorVector verdict = attack_model.predict(features.values);
      const double member_score = verdict[1];
      out.scores.push_back(member_score);
      out.decisions.push_back(member_score >= 0.5 ? MembershipLabel::Member
                                                  : MembershipLabel::NonMember);
      out.truth.push_back(truth);
    }
  };
  decide(member_part, MembershipLabel::Member);
  decide(nonmember_part, MembershipLabel::NonMember);
  out.queries_spent = target.query_count() - before;
  return out;
}

AttackDecisions adversary1(const TrainConfig& shadow_cfg,
                           const TrainConfig& attack_cfg, const Dataset& data,
                           const SplitPlan& plan, BlackBox& target,
                           std::size_t k) {
  if (k == 0) k = default_k(data.num_classes());
  const auto shadow = train(data, plan.part("shadow_train"), shadow_cfg);
  const auto rows = build_attack_training_set(*shadow, data, plan, k);
  const auto attack_model = train_attack_model(rows, attack_cfg);
  return infer_membership(*attack_model, target, data,
                          plan.part("target_train"), plan.part("target_out"),
                          k);
}

namespace {

// contiguous slice i of m; earlier slices take the remainder
std::span<const std::size_t> slice_of(std::span<const std::size_t> part,
                                      int num_slices, int i) {
  const std::size_t n = part.size();
  const std::size_t m = static_cast<std::size_t>(num_slices);
  const std::size_t base = n / m;
  const std::size_t rem = n % m;
  const std::size_t ui = static_cast<std::size_t>(i);
  const std::size_t offset = ui * base + std::min(ui, rem);
  const std::size_t len = base + (ui < rem ? 1 : 0);
  return part.subspan(offset, len);
}

}  // namespace

AttackDecisions adversary1_pooled(const TrainConfig& shadow_cfg,
                                  const TrainConfig& attack_cfg,
                                  const Dataset& data, const SplitPlan& plan,
                                  BlackBox& target, std::size_t k,
                                  int num_shadows) {
  if (num_shadows < 1)
    throw ValidationError("need at least one shadow model");
  const auto shadow_train = plan.part("shadow_train");
  const auto shadow_out = plan.part("shadow_out");
  if (shadow_train.size() < static_cast<std::size_t>(num_shadows) ||
      shadow_out.size() < static_cast<std::size_t>(num_shadows))
    throw ValidationError("shadow half too small for " +
                          std::to_string(num_shadows) + " shadows");
  if (k == 0) k = default_k(data.num_classes());

  std::vector<AttackRow> rows;
  for (int i = 0; i < num_shadows; ++i) {
    TrainConfig cfg = shadow_cfg;
    cfg.seed = shadow_cfg.seed + static_cast<std::uint64_t>(i);
    const auto train_slice = slice_of(shadow_train, num_shadows, i);
    const auto out_slice = slice_of(shadow_out, num_shadows, i);
    const auto shadow = train(data, train_slice, cfg);
    auto slice_rows = attack_rows(*shadow, data, train_slice, out_slice, k);
    rows.insert(rows.end(), std::make_move_iterator(slice_rows.begin()),
                std::make_move_iterator(slice_rows.end()));
  }
  const auto attack_model = train_attack_model(rows, attack_cfg);
  return infer_membership(*attack_model, target, data,
                          plan.part("target_train"), plan.part("target_out"),
                          k);
}

AttackDecisions combining_attack(std::span<const TrainConfig> sub_cfgs,
                                 const TrainConfig& attack_cfg,
                                 const Dataset& data, const SplitPlan& plan,
                                 BlackBox& target, std::size_t k) {
  if (sub_cfgs.empty())
    throw ValidationError("combining attack needs at least one sub-shadow");
  std::set<LearnerKind> kinds;
  for (const TrainConfig& cfg : sub_cfgs)
    if (!kinds.insert(cfg.learner_kind).second)
      std::cerr << "warning: combining attack: duplicate sub-shadow kind "
                << to_string(cfg.learner_kind) << "\n";
  if (k == 0) k = default_k(data.num_classes());

  // every sub-shadow sees the same training part; rows are stacked
  std::vector<AttackRow> rows;
  for (const TrainConfig& cfg : sub_cfgs) {
    const auto shadow = train(data, plan.part("shadow_train"), cfg);
    auto sub_rows = build_attack_training_set(*shadow, data, plan, k);
    rows.insert(rows.end(), std::make_move_iterator(sub_rows.begin()),
                std::make_move_iterator(sub_rows.end()));
  }
  const auto attack_model = train_attack_model(rows, attack_cfg);
  return infer_membership(*attack_model, target, data,
                          plan.part("target_train"), plan.part("target_out"),
                          k);
}

AttackDecisions adversary2(const Dataset& shadow_data,
                           const SplitPlan& shadow_plan,
                           const TrainConfig& shadow_cfg,
                           const TrainConfig& attack_cfg,
                           const Dataset& target_data,
                           const SplitPlan& target_plan, BlackBox& target) {
  // feature length is limited by whichever side has fewer classes
  const std::size_t k = std::min(default_k(shadow_data.num_classes()),
                                 default_k(target_data.num_classes()));
  const auto shadow =
      train(shadow_data, shadow_plan.part("shadow_train"), shadow_cfg);
  const auto rows =
      build_attack_training_set(*shadow, shadow_data, shadow_plan, k);
  const auto attack_model = train_attack_model(rows, attack_cfg);
  return infer_membership(*attack_model, target, target_data,
                          target_plan.part("target_train"),
                          target_plan.part("target_out"), k);
}

std::string to_string(StatKind kind) {
  switch (kind) {
    case StatKind::Max:
      return "max";
    case StatKind::Std:
      return "std";
    case StatKind::Entropy:
      return "entropy";
  }
  return "max";
}

StatKind stat_kind_from_string(const std::string& s) {
  if (s == "max") return StatKind::Max;
  if (s == "std") return StatKind::Std;
  if (s == "entropy") return StatKind::Entropy;
  throw ValidationError("unknown statistic: " + s);
}

double statistic(const PosteriorVector& posteriors, StatKind kind) {
  const std::vector<double>& p = posteriors.probs();
  switch (kind) {
    case StatKind::Max:
      return p[argmax_lowest(p)];
    case StatKind::Std: {
      const double mean =
          std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
      double acc = 0.0;
      for (double v : p) acc += (v - mean) * (v - mean);
      return std::sqrt(acc / static_cast<double>(p.size()));
    }
    case StatKind::Entropy: {
      double acc = 0.0;
      for (double v : p)
        if (v > 0.0) acc -= v * std::log(v);
      return acc;
    }
  }
  throw ValidationError("unknown statistic");
}

std::vector<std::vector<double>> generate_probes(const FeatureSpaceSpec& space,
                                                 std::size_t n,
                                                 std::uint64_t seed) {
  if (space.kind == FeatureSpaceKind::Unbounded)
    throw ValidationError(
        "probe generation needs bounded features (unit_interval or binary)");
  Rng rng(seed);
  std::vector<std::vector<double>> probes(n,
                                          std::vector<double>(space.dimensionality));
  for (auto& probe : probes)
    for (double& v : probe)
      v = space.kind == FeatureSpaceKind::Binary ? (rng.coin() ? 1.0 : 0.0)
                                                 : rng.uniform01();
  return probes;
}

ThresholdRule::Direction default_direction(StatKind kind) {
  return kind == StatKind::Entropy ? ThresholdRule::Direction::BelowMeansMember
                                   : ThresholdRule::Direction::AboveMeansMember;
}

ThresholdRule choose_threshold(BlackBox& target,
                               const std::vector<std::vector<double>>& probes,
                               double t_percent) {
  if (probes.empty()) throw ValidationError("no probes to calibrate with");
  if (!(t_percent > 0.0) || !(t_percent < 100.0))
    throw ValidationError("t percentile must be in (0, 100)");
  std::vector<double> maxima;
  maxima.reserve(probes.size());
  for (const auto& probe : probes)
    maxima.push_back(statistic(target.query(probe), StatKind::Max));
  std::sort(maxima.begin(), maxima.end());
  // nearest-rank (100 - t)th percentile
  const double rank = static_cast<double>(maxima.size()) *
                      (100.0 - t_percent) / 100.0;
  std::size_t idx = static_cast<std::size_t>(std::ceil(rank - 1e-9));
  if (idx > 0) --idx;
  if (idx >= maxima.size()) idx = maxima.size() - 1;
  return ThresholdRule{StatKind::Max, maxima[idx],
                       ThresholdRule::Direction::AboveMeansMember};
}

Adversary3Result adversary3(BlackBox& target, const ThresholdRule& rule,
                            std::span<const std::vector<double>> points) {
  if (!std::isfinite(rule.threshold))
    throw ValidationError("threshold rule is not finite");
  Adversary3Result out;
  out.decisions.reserve(points.size());
  out.stats.reserve(points.size());
  for (const auto& point : points) {
    const double stat = statistic(target.query(point), rule.statistic);
    const bool member =
        rule.direction == ThresholdRule::Direction::AboveMeansMember
            ? stat >= rule.threshold
            : stat <= rule.threshold;
    out.stats.push_back(stat);
    out.decisions.push_back(member ? MembershipLabel::Member
                                   : MembershipLabel::NonMember);
  }
  return out;
}

AttackDecisions adversary3_on_plan(BlackBox& target, const ThresholdRule& rule,
                                   const Dataset& data,
                                   std::span<const std::size_t> member_part,
                                   std::span<const std::size_t> nonmember_part) {
  std::vector<std::vector<double>> points;
  points.reserve(member_part.size() + nonmember_part.size());
  AttackDecisions out;
  for (std::size_t idx : member_part) {
    points.push_back(data.point(idx).features);
    out.truth.push_back(MembershipLabel::Member);
  }
  for (std::size_t idx : nonmember_part) {
    points.push_back(data.point(idx).features);
    out.truth.push_back(MembershipLabel::NonMember);
  }
  const std::uint64_t before = target.query_count();
  Adversary3Result res = adversary3(target, rule, points);
  out.queries_spent = target.query_count() - before;
  out.decisions = std::move(res.decisions);
  out.scores.resize(res.stats.size());
  const double sign =
      rule.direction == ThresholdRule::Direction::AboveMeansMember ? 1.0 : -1.0;
  for (std::size_t i = 0; i < res.stats.size(); ++i)
    out.scores[i] = sign * res.stats[i];
  return out;
}

}  // namespace mileaks

#include "mileaks/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mileaks {

std::string to_string(FeatureSpaceKind kind) {
  switch (kind) {
    case FeatureSpaceKind::UnitInterval:
      return "unit_interval";
    case FeatureSpaceKind::Binary:
      return "binary";
    case FeatureSpaceKind::Unbounded:
      return "unbounded";
  }
  return "unbounded";
}

FeatureSpaceKind feature_space_kind_from_string(const std::string& s) {
  if (s == "unit_interval") return FeatureSpaceKind::UnitInterval;
  if (s == "binary") return FeatureSpaceKind::Binary;
  if (s == "unbounded") return FeatureSpaceKind::Unbounded;
  throw ValidationError("unknown feature space kind: " + s);
}

PosteriorVector::PosteriorVector(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) throw ValidationError("posterior vector is empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw ValidationError("posterior entry outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kPosteriorSumTolerance)
    throw ValidationError("posterior entries do not sum to 1");
}

Dataset::Dataset(std::vector<LabeledPoint> points, int num_classes,
                 FeatureSpaceSpec feature_space, std::string name)
    : points_(std::move(points)),
      num_classes_(num_classes),
      feature_space_(feature_space),
      name_(std::move(name)) {
  if (num_classes_ < 2)
    throw ValidationError("dataset '" + name_ +
                          "' must declare at least 2 classes");
  for (const auto& p : points_) {
    if (p.features.size() != feature_space_.dimensionality)
      throw ValidationError("dataset '" + name_ +
                            "' point dimensionality mismatch");
    if (p.label < 0 || p.label >= num_classes_)
      throw ValidationError("dataset '" + name_ + "' label out of range");
    for (double v : p.features)
      if (!std::isfinite(v))
        throw ValidationError("dataset '" + name_ + "' non-finite feature");
  }
}

SplitPlan::SplitPlan(std::map<std::string, std::vector<std::size_t>> parts,
                     std::size_t dataset_size)
    : parts_(std::move(parts)), dataset_size_(dataset_size) {
  std::set<std::size_t> seen;
  for (const auto& [name, indices] : parts_) {
    for (std::size_t idx : indices) {
      if (idx >= dataset_size_)
        throw ValidationError("split part '" + name + "' index out of range");
      if (!seen.insert(idx).second)
        throw ValidationError("split parts are not disjoint at index " +
                              std::to_string(idx));
    }
  }
}

bool SplitPlan::has_part(const std::string& name) const {
  return parts_.contains(name);
}

const std::vector<std::size_t>& SplitPlan::part(const std::string& name) const {
  auto it = parts_.find(name);
  if (it == parts_.end())
    throw ValidationError("split plan has no part named '" + name + "'");
  return it->second;
}

std::vector<std::string> SplitPlan::part_names() const {
  std::vector<std::string> names;
  names.reserve(parts_.size());
  for (const auto& [name, _] : parts_) names.push_back(name);
  return names;
}

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Logistic:
      return "logistic";
    case LearnerKind::Mlp:
      return "mlp";
    case LearnerKind::Forest:
      return "forest";
  }
  return "mlp";
}

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "logistic") return LearnerKind::Logistic;
  if (s == "mlp") return LearnerKind::Mlp;
  if (s == "forest") return LearnerKind::Forest;
  throw ValidationError("unknown learner kind: " + s);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be positive");
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning_rate must be positive");
  if (l2_lambda < 0.0 || !std::isfinite(l2_lambda))
    throw ValidationError("l2_lambda must be non-negative");
  if (hidden_units < 1) throw ValidationError("hidden_units must be positive");
  if (dropout_input < 0.0 || dropout_input >= 1.0)
    throw ValidationError("dropout_input must be in [0,1)");
  if (dropout_hidden < 0.0 || dropout_hidden >= 1.0)
    throw ValidationError("dropout_hidden must be in [0,1)");
  if (learner_kind != LearnerKind::Mlp &&
      (dropout_input != 0.0 || dropout_hidden != 0.0))
    throw ValidationError("dropout applies to mlp learners only");
  if (trees < 1) throw ValidationError("trees must be positive");
  if (max_depth < 1) throw ValidationError("max_depth must be positive");
}

}  // namespace mileaks

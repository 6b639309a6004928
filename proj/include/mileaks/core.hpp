#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mileaks/errors.hpp"

namespace mileaks {

inline constexpr double kPosteriorSumTolerance = 1e-9;

enum class FeatureSpaceKind { UnitInterval, Binary, Unbounded };

std::string to_string(FeatureSpaceKind kind);
FeatureSpaceKind feature_space_kind_from_string(const std::string& s);

struct FeatureSpaceSpec {
  FeatureSpaceKind kind = FeatureSpaceKind::Unbounded;
  std::size_t dimensionality = 0;
};

struct LabeledPoint {
  std::vector<double> features;
  int label = 0;
};

enum class MembershipLabel : int { NonMember = 0, Member = 1 };

// Per-class probability output of a classifier. Entries are validated to lie
// in [0,1] and sum to 1 within kPosteriorSumTolerance.
class PosteriorVector {
 public:
  explicit PosteriorVector(std::vector<double> probs);

  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  bool operator==(const PosteriorVector& other) const = default;

 private:
  std::vector<double> probs_;
};

// Feature vectors with dense class labels in [0, c). Immutable after
// construction; invariants are checked up front.
class Dataset {
 public:
  Dataset(std::vector<LabeledPoint> points, int num_classes,
          FeatureSpaceSpec feature_space, std::string name);

  const std::vector<LabeledPoint>& points() const { return points_; }
  const LabeledPoint& point(std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  int num_classes() const { return num_classes_; }
  std::size_t dimensionality() const { return feature_space_.dimensionality; }
  const FeatureSpaceSpec& feature_space() const { return feature_space_; }
  const std::string& name() const { return name_; }

 private:
  std::vector<LabeledPoint> points_;
  int num_classes_;
  FeatureSpaceSpec feature_space_;
  std::string name_;
};

// Named, pairwise-disjoint index sets into a dataset. The union may be a
// strict subset of the dataset.
class SplitPlan {
 public:
  SplitPlan(std::map<std::string, std::vector<std::size_t>> parts,
            std::size_t dataset_size);

  bool has_part(const std::string& name) const;
  const std::vector<std::size_t>& part(const std::string& name) const;
  std::vector<std::string> part_names() const;
  std::size_t dataset_size() const { return dataset_size_; }
  const std::map<std::string, std::vector<std::size_t>>& parts() const {
    return parts_;
  }

 private:
  std::map<std::string, std::vector<std::size_t>> parts_;
  std::size_t dataset_size_;
};

enum class LearnerKind { Logistic, Mlp, Forest };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& s);

struct TrainConfig {
  LearnerKind learner_kind = LearnerKind::Mlp;
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 0.1;
  double l2_lambda = 0.0;
  int hidden_units = 128;       // mlp only
  double dropout_input = 0.0;   // mlp only
  double dropout_hidden = 0.0;  // mlp only
  int trees = 32;               // forest only
  int max_depth = 16;           // forest only
  std::uint64_t seed = 0;

  void validate() const;
};

}  // namespace mileaks

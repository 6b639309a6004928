#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mileaks/core.hpp"
#include "mileaks/rng.hpp"

namespace mileaks {

// Prediction interface shared by plain classifiers and composite models
// (stacked defenses). Implementations are immutable once built; predict is a
// pure function.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PosteriorVector predict(std::span<const double> features) const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual int num_classes() const = 0;
};

// Global argmax rule: ties break toward the lowest index.
std::size_t argmax_lowest(std::span<const double> values);

// Divides by the sum so the posterior invariant holds in every numeric
// regime. Throws NumericError if the raw scores are unusable.
PosteriorVector renormalized(std::vector<double> raw);

void validate_input(std::span<const double> features, std::size_t input_dim);

class Classifier : public Predictor {
 public:
  virtual LearnerKind kind() const = 0;
  virtual nlohmann::json to_json() const = 0;

  void save(const std::string& path) const;
  static std::unique_ptr<Classifier> from_json(const nlohmann::json& doc);
  static std::unique_ptr<Classifier> load(const std::string& path);
};

// ---------------------------------------------------------------------------
// Feed-forward nets: softmax regression (logistic) and one-hidden-layer
// rectifier mlp share a flat-parameter representation. NetState is the
// training-time view and the surface for finite-difference gradient checks;
// FeedForwardNet freezes a NetState into an immutable Classifier.

struct NetSpec {
  std::size_t input_dim = 0;
  int hidden_units = 0;  // 0 -> logistic (no hidden layer)
  int num_classes = 0;
};

// Per-example keep masks for one training iteration, drawn from the seeded
// stream. keep == 1 - dropout ratio; inverted dropout scales kept units by
// 1/keep at train time so prediction needs no scaling.
struct DropoutMasks {
  std::vector<std::uint8_t> input;   // batch x input_dim, row-major
  std::vector<std::uint8_t> hidden;  // batch x hidden_units, row-major
  double keep_input = 1.0;
  double keep_hidden = 1.0;
};

DropoutMasks draw_dropout_masks(Rng& rng, std::size_t batch, const NetSpec& spec,
                                double dropout_input, double dropout_hidden);

class NetState {
 public:
  NetState(NetSpec spec, Rng& init_stream);  // weights U(+-1/sqrt(fan_in)), biases 0
  NetState(NetSpec spec, std::vector<double> params);

  const NetSpec& spec() const { return spec_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  PosteriorVector forward(std::span<const double> x) const;

  // Mean cross-entropy over the batch plus 0.5 * l2 * sum(w^2) over weights.
  // Masks, when given, are frozen for the evaluation (row i of the masks
  // corresponds to batch[i]).
  double batch_loss(const Dataset& data, std::span<const std::size_t> batch,
                    double l2, const DropoutMasks* masks = nullptr) const;

  std::vector<double> loss_gradient(const Dataset& data,
                                    std::span<const std::size_t> batch,
                                    double l2,
                                    const DropoutMasks* masks = nullptr) const;

 private:
  NetSpec spec_;
  std::vector<double> params_;
};

class FeedForwardNet final : public Classifier {
 public:
  FeedForwardNet(LearnerKind kind, NetState state);

  PosteriorVector predict(std::span<const double> features) const override;
  std::size_t input_dim() const override { return state_.spec().input_dim; }
  int num_classes() const override { return state_.spec().num_classes; }
  LearnerKind kind() const override { return kind_; }
  nlohmann::json to_json() const override;

  const NetState& state() const { return state_; }

 private:
  LearnerKind kind_;
  NetState state_;
};

// ---------------------------------------------------------------------------
// Random forest with Gini splits.

struct TreeNode {
  int feature = -1;  // < 0 -> leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> posterior;  // leaves only: class frequencies
};

class DecisionTree {
 public:
  explicit DecisionTree(std::vector<TreeNode> nodes);

  const std::vector<double>& leaf_posterior(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
};

class ForestModel final : public Classifier {
 public:
  ForestModel(std::vector<DecisionTree> trees, std::size_t input_dim,
              int num_classes);

  PosteriorVector predict(std::span<const double> features) const override;
  std::size_t input_dim() const override { return input_dim_; }
  int num_classes() const override { return num_classes_; }
  LearnerKind kind() const override { return LearnerKind::Forest; }
  nlohmann::json to_json() const override;

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t input_dim_;
  int num_classes_;
};

// ---------------------------------------------------------------------------

// Trains a classifier on the given part. Deterministic function of
// (dataset, part, config): identical inputs give bit-identical parameters.
std::unique_ptr<Classifier> train(const Dataset& data,
                                  std::span<const std::size_t> part,
                                  const TrainConfig& config);

// Fraction of part whose argmax posterior equals the label.
double accuracy(const Predictor& model, const Dataset& data,
                std::span<const std::size_t> part);

// Gradient of the mean cross-entropy loss w.r.t. all parameters. Forests
// have no gradient; calling this on one is an error.
std::vector<double> loss_gradient(const Classifier& model, const Dataset& data,
                                  std::span<const std::size_t> batch,
                                  double l2 = 0.0,
                                  const DropoutMasks* masks = nullptr);

}  // namespace mileaks

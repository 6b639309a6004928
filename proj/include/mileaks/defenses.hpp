#pragma once

#include <memory>
#include <span>

#include "json.hpp"
#include "mileaks/core.hpp"
#include "mileaks/learners.hpp"

namespace mileaks {

struct DropoutPreset {
  double input = 0.5;
  double hidden = 0.5;
};

// Config fragment for dropout-defended mlp training; (0.5, 0.5) is the
// default ratio pair.
DropoutPreset dropout_preset(double ratio_input, double ratio_hidden);

TrainConfig apply_dropout(TrainConfig config, const DropoutPreset& preset);

// Two base classifiers trained on disjoint data; a meta classifier over
// their concatenated posteriors, trained on a third disjoint part.
class StackedModel final : public Predictor {
 public:
  StackedModel(std::unique_ptr<Classifier> base1,
               std::unique_ptr<Classifier> base2,
               std::unique_ptr<Classifier> meta);

  PosteriorVector predict(std::span<const double> features) const override;
  std::size_t input_dim() const override { return base1_->input_dim(); }
  int num_classes() const override { return meta_->num_classes(); }

  const Classifier& base1() const { return *base1_; }
  const Classifier& base2() const { return *base2_; }
  const Classifier& meta() const { return *meta_; }

  // names of the plan parts each constituent was trained on, recorded for
  // reproducibility when known
  const std::vector<std::string>& part_names() const { return part_names_; }
  void set_part_names(std::vector<std::string> names);

  nlohmann::json to_json() const;
  static std::unique_ptr<StackedModel> from_json(const nlohmann::json& doc);
  void save(const std::string& path) const;
  static std::unique_ptr<StackedModel> load(const std::string& path);

 private:
  std::unique_ptr<Classifier> base1_;
  std::unique_ptr<Classifier> base2_;
  std::unique_ptr<Classifier> meta_;
  std::vector<std::string> part_names_;
};

// base1 learns part1, base2 part2; the meta model learns part3 transformed
// to concatenated base posteriors. Overlapping parts defeat the defense and
// are a hard error. Sub-model seeds derive from `seed` (+0, +1, +2).
std::unique_ptr<StackedModel> train_stacked(
    const Dataset& data, std::span<const std::size_t> part1,
    std::span<const std::size_t> part2, std::span<const std::size_t> part3,
    const TrainConfig& cfg1, const TrainConfig& cfg2,
    const TrainConfig& cfg_meta, std::uint64_t seed);

PosteriorVector stacked_predict(const StackedModel& model,
                                std::span<const double> features);

}  // namespace mileaks

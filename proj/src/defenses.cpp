#include "mileaks/defenses.hpp"

#include <numeric>
#include <set>

#include "mileaks/jsonio.hpp"

namespace mileaks {

DropoutPreset dropout_preset(double ratio_input, double ratio_hidden) {
  if (ratio_input < 0.0 || ratio_input >= 1.0 || ratio_hidden < 0.0 ||
      ratio_hidden >= 1.0)
    throw ValidationError("dropout ratios must be in [0, 1)");
  return DropoutPreset{ratio_input, ratio_hidden};
}

TrainConfig apply_dropout(TrainConfig config, const DropoutPreset& preset) {
  if (config.learner_kind != LearnerKind::Mlp)
    throw ValidationError("dropout defends mlp targets only");
  config.dropout_input = preset.input;
  config.dropout_hidden = preset.hidden;
  return config;
}

StackedModel::StackedModel(std::unique_ptr<Classifier> base1,
                           std::unique_ptr<Classifier> base2,
                           std::unique_ptr<Classifier> meta)
    : base1_(std::move(base1)),
      base2_(std::move(base2)),
      meta_(std::move(meta)) {
  if (!base1_ || !base2_ || !meta_)
    throw ValidationError("stacked model needs three constituents");
  if (base1_->input_dim() != base2_->input_dim())
    throw ValidationError("stacked bases disagree on input dimensionality");
  if (base1_->num_classes() != base2_->num_classes())
    throw ValidationError("stacked bases disagree on class count");
  const std::size_t c = static_cast<std::size_t>(base1_->num_classes());
  if (meta_->input_dim() != 2 * c)
    throw ValidationError("stacked meta model must consume 2c inputs");
}

PosteriorVector StackedModel::predict(std::span<const double> features) const {
  validate_input(features, base1_->input_dim());
  const PosteriorVector p1 = base1_->predict(features);
  const PosteriorVector p2 = base2_->predict(features);
  std::vector<double> concat;
  concat.reserve(p1.size() + p2.size());
  concat.insert(concat.end(), p1.probs().begin(), p1.probs().end());
  concat.insert(concat.end(), p2.probs().begin(), p2.probs().end());
  return meta_->predict(concat);
}

void StackedModel::set_part_names(std::vector<std::string> names) {
  if (names.size() != 3)
    throw ValidationError("stacked models train on exactly three parts");
  part_names_ = std::move(names);
}

nlohmann::json StackedModel::to_json() const {
  nlohmann::json doc{{"kind", "stacked"},
                     {"base1", base1_->to_json()},
                     {"base2", base2_->to_json()},
                     {"meta", meta_->to_json()}};
  if (!part_names_.empty()) doc["parts"] = part_names_;
  return doc;
}

std::unique_ptr<StackedModel> StackedModel::from_json(
    const nlohmann::json& doc) {
  check_keys(doc, {"kind", "base1", "base2", "meta", "parts"},
             "stacked model");
  if (doc.value("kind", "") != "stacked")
    throw ValidationError("not a stacked model document");
  auto model = std::make_unique<StackedModel>(
      Classifier::from_json(doc.at("base1")),
      Classifier::from_json(doc.at("base2")),
      Classifier::from_json(doc.at("meta")));
  if (doc.contains("parts"))
    model->set_part_names(doc.at("parts").get<std::vector<std::string>>());
  return model;
}

void StackedModel::save(const std::string& path) const {
  write_json_file(path, to_json());
}

std::unique_ptr<StackedModel> StackedModel::load(const std::string& path) {
  return from_json(parse_json_file(path));
}

std::unique_ptr<StackedModel> train_stacked(
    const Dataset& data, std::span<const std::size_t> part1,
    std::span<const std::size_t> part2, std::span<const std::size_t> part3,
    const TrainConfig& cfg1, const TrainConfig& cfg2,
    const TrainConfig& cfg_meta, std::uint64_t seed) {
  if (part1.empty() || part2.empty() || part3.empty())
    throw ValidationError("stacked training needs three non-empty parts");
  std::set<std::size_t> seen;
  for (const auto part : {part1, part2, part3})
    for (std::size_t idx : part)
      if (!seen.insert(idx).second)
        throw ValidationError(
            "stacked training parts overlap; the defense requires disjoint "
            "data");

  TrainConfig c1 = cfg1;
  TrainConfig c2 = cfg2;
  TrainConfig cm = cfg_meta;
  c1.seed = seed;
  c2.seed = seed + 1;
  cm.seed = seed + 2;

  auto base1 = train(data, part1, c1);
  auto base2 = train(data, part2, c2);

  // part 3 becomes (posterior1 || posterior2) with the original label
  const std::size_t c = static_cast<std::size_t>(data.num_classes());
  std::vector<LabeledPoint> meta_points;
  meta_points.reserve(part3.size());
  for (std::size_t idx : part3) {
    const LabeledPoint& pt = data.point(idx);
    const PosteriorVector p1 = base1->predict(pt.features);
    const PosteriorVector p2 = base2->predict(pt.features);
    LabeledPoint meta_pt;
    meta_pt.label = pt.label;
    meta_pt.features.reserve(2 * c);
    meta_pt.features.insert(meta_pt.features.end(), p1.probs().begin(),
                            p1.probs().end());
    meta_pt.features.insert(meta_pt.features.end(), p2.probs().begin(),
                            p2.probs().end());
    meta_points.push_back(std::move(meta_pt));
  }
  const Dataset meta_data(std::move(meta_points), data.num_classes(),
                          {FeatureSpaceKind::UnitInterval, 2 * c},
                          data.name() + "_meta");
  std::vector<std::size_t> all(meta_data.size());
  std::iota(all.begin(), all.end(), 0);
  auto meta = train(meta_data, all, cm);

  return std::make_unique<StackedModel>(std::move(base1), std::move(base2),
                                        std::move(meta));
}

PosteriorVector stacked_predict(const StackedModel& model,
                                std::span<const double> features) {
  return model.predict(features);
}

}  // namespace mileaks

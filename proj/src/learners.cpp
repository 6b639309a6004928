#include "mileaks/learners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mileaks/jsonio.hpp"

namespace mileaks {

std::unique_ptr<Classifier> train_forest_impl(const Dataset& data,
                                              std::span<const std::size_t> part,
                                              const TrainConfig& config);

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

PosteriorVector renormalized(std::vector<double> raw) {
  double sum = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v) || v < 0.0)
      throw NumericError("cannot normalize scores into a posterior");
    sum += v;
  }
  if (!(sum > 0.0))
    throw NumericError("cannot normalize scores into a posterior");
  for (double& v : raw) v /= sum;
  return PosteriorVector(std::move(raw));
}

void validate_input(std::span<const double> features, std::size_t input_dim) {
  if (features.size() != input_dim)
    throw ValidationError("feature vector has length " +
                          std::to_string(features.size()) + ", expected " +
                          std::to_string(input_dim));
  for (double v : features)
    if (!std::isfinite(v)) throw ValidationError("non-finite input feature");
}

namespace {

std::unique_ptr<Classifier> train_net(const Dataset& data,
                                      std::span<const std::size_t> part,
                                      const TrainConfig& config) {
  const NetSpec spec{
      data.dimensionality(),
      config.learner_kind == LearnerKind::Mlp ? config.hidden_units : 0,
      data.num_classes()};
  Rng rng(config.seed);
  NetState state(spec, rng);
  const bool use_dropout =
      config.learner_kind == LearnerKind::Mlp &&
      (config.dropout_input > 0.0 || config.dropout_hidden > 0.0);

  std::vector<std::size_t> order(part.begin(), part.end());
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t len = std::min(batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      DropoutMasks masks;
      const DropoutMasks* mask_ptr = nullptr;
      if (use_dropout) {
        masks = draw_dropout_masks(rng, len, spec, config.dropout_input,
                                   config.dropout_hidden);
        mask_ptr = &masks;
      }
      const std::vector<double> grad =
          state.loss_gradient(data, batch, config.l2_lambda, mask_ptr);
      for (std::size_t i = 0; i < grad.size(); ++i)
        state.params()[i] -= config.learning_rate * grad[i];
    }
    const double loss = state.batch_loss(data, part, config.l2_lambda);
    if (!std::isfinite(loss))
      throw NumericError("training diverged: non-finite loss after epoch " +
                         std::to_string(epoch + 1));
  }
  return std::make_unique<FeedForwardNet>(config.learner_kind,
                                          std::move(state));
}

}  // namespace

std::unique_ptr<Classifier> train(const Dataset& data,
                                  std::span<const std::size_t> part,
                                  const TrainConfig& config) {
  config.validate();
  if (part.empty()) throw ValidationError("training part is empty");
  for (std::size_t idx : part)
    if (idx >= data.size())
      throw ValidationError("training part index out of range");
  switch (config.learner_kind) {
    case LearnerKind::Logistic:
    case LearnerKind::Mlp:
      return train_net(data, part, config);
    case LearnerKind::Forest:
      return train_forest_impl(data, part, config);
  }
  throw ValidationError("unknown learner kind");
}

double accuracy(const Predictor& model, const Dataset& data,
                std::span<const std::size_t> part) {
  if (part.empty()) throw ValidationError("accuracy over an empty part");
  std::size_t correct = 0;
  for (std::size_t idx : part) {
    const LabeledPoint& pt = data.point(idx);
    const PosteriorVector p = model.predict(pt.features);
    if (argmax_lowest(p.probs()) == static_cast<std::size_t>(pt.label))
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(part.size());
}

std::vector<double> loss_gradient(const Classifier& model, const Dataset& data,
                                  std::span<const std::size_t> batch, double l2,
                                  const DropoutMasks* masks) {
  const auto* net = dynamic_cast<const FeedForwardNet*>(&model);
  if (net == nullptr)
    throw ValidationError("loss_gradient is undefined for forest classifiers");
  return net->state().loss_gradient(data, batch, l2, masks);
}

void Classifier::save(const std::string& path) const {
  write_json_file(path, to_json());
}

std::unique_ptr<Classifier> Classifier::from_json(const nlohmann::json& doc) {
  check_keys(doc,
             {"kind", "input_dim", "num_classes", "hidden_units", "params",
              "trees"},
             "classifier");
  if (!doc.contains("kind")) throw ValidationError("classifier: missing kind");
  const LearnerKind kind = learner_kind_from_string(doc.at("kind"));
  const std::size_t input_dim = doc.at("input_dim").get<std::size_t>();
  const int num_classes = doc.at("num_classes").get<int>();

  if (kind == LearnerKind::Forest) {
    std::vector<DecisionTree> trees;
    for (const auto& tree_doc : doc.at("trees")) {
      check_keys(tree_doc, {"nodes"}, "forest tree");
      std::vector<TreeNode> nodes;
      for (const auto& node_doc : tree_doc.at("nodes")) {
        check_keys(node_doc, {"feature", "threshold", "left", "right",
                              "posterior"},
                   "tree node");
        TreeNode node;
        if (node_doc.contains("posterior")) {
          node.posterior = node_doc.at("posterior").get<std::vector<double>>();
          if (node.posterior.size() != static_cast<std::size_t>(num_classes))
            throw ValidationError("tree leaf posterior length mismatch");
        } else {
          node.feature = node_doc.at("feature").get<int>();
          node.threshold = node_doc.at("threshold").get<double>();
          node.left = node_doc.at("left").get<int>();
          node.right = node_doc.at("right").get<int>();
        }
        nodes.push_back(std::move(node));
      }
      trees.emplace_back(std::move(nodes));
    }
    return std::make_unique<ForestModel>(std::move(trees), input_dim,
                                         num_classes);
  }

  const int hidden =
      kind == LearnerKind::Mlp ? doc.at("hidden_units").get<int>() : 0;
  NetState state(NetSpec{input_dim, hidden, num_classes},
                 doc.at("params").get<std::vector<double>>());
  return std::make_unique<FeedForwardNet>(kind, std::move(state));
}

std::unique_ptr<Classifier> Classifier::load(const std::string& path) {
  return from_json(parse_json_file(path));
}

}  // namespace mileaks

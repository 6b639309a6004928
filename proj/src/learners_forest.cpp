#include <algorithm>
#include <cmath>

#include "mileaks/learners.hpp"

namespace mileaks {

namespace {

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double acc = 1.0;
  for (std::size_t cnt : counts) {
    const double f = static_cast<double>(cnt) / static_cast<double>(total);
    acc -= f * f;
  }
  return acc;
}

struct TreeBuilder {
  const Dataset& data;
  int max_depth;
  int n_feature_sample;
  Rng& rng;
  std::vector<TreeNode> nodes;

  int build(std::vector<std::size_t>& indices, int depth) {
    const std::size_t c = static_cast<std::size_t>(data.num_classes());
    std::vector<std::size_t> counts(c, 0);
    for (std::size_t idx : indices)
      ++counts[static_cast<std::size_t>(data.point(idx).label)];
    const std::size_t n = indices.size();

    const auto make_leaf = [&]() {
      TreeNode leaf;
      leaf.posterior.resize(c);
      for (std::size_t k = 0; k < c; ++k)
        leaf.posterior[k] =
            static_cast<double>(counts[k]) / static_cast<double>(n);
      nodes.push_back(std::move(leaf));
      return static_cast<int>(nodes.size() - 1);
    };

    const double parent_gini = gini(counts, n);
    if (depth >= max_depth || n < 2 || parent_gini == 0.0) return make_leaf();

    // sqrt(d) distinct candidate features, drawn from the seeded stream
    const std::size_t d = data.dimensionality();
    std::vector<std::size_t> feats(d);
    for (std::size_t j = 0; j < d; ++j) feats[j] = j;
    const std::size_t k_feats =
        std::min<std::size_t>(static_cast<std::size_t>(n_feature_sample), d);
    for (std::size_t i = 0; i < k_feats; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(d - i));
      std::swap(feats[i], feats[j]);
    }
    feats.resize(k_feats);

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    std::vector<std::size_t> order(indices);
    std::vector<std::size_t> left_counts(c);
    for (std::size_t f : feats) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.point(a).features[f] < data.point(b).features[f];
      });
      std::fill(left_counts.begin(), left_counts.end(), 0);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left_counts[static_cast<std::size_t>(data.point(order[i]).label)];
        const double v = data.point(order[i]).features[f];
        const double next = data.point(order[i + 1]).features[f];
        if (v == next) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        std::vector<std::size_t> right_counts(c);
        for (std::size_t k = 0; k < c; ++k)
          right_counts[k] = counts[k] - left_counts[k];
        const double weighted =
            (static_cast<double>(nl) * gini(left_counts, nl) +
             static_cast<double>(nr) * gini(right_counts, nr)) /
            static_cast<double>(n);
        const double gain = parent_gini - weighted;
        // strict > keeps the first candidate on ties (features in sampled
        // order, thresholds ascending)
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = (v + next) / 2.0;
        }
      }
    }
    if (best_feature < 0) return make_leaf();

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t idx : indices) {
      if (data.point(idx).features[static_cast<std::size_t>(best_feature)] <=
          best_threshold)
        left_idx.push_back(idx);
      else
        right_idx.push_back(idx);
    }
    if (left_idx.empty() || right_idx.empty()) return make_leaf();

    TreeNode split;
    split.feature = best_feature;
    split.threshold = best_threshold;
    nodes.push_back(split);
    const int self = static_cast<int>(nodes.size() - 1);
    const int left = build(left_idx, depth + 1);
    const int right = build(right_idx, depth + 1);
    nodes[static_cast<std::size_t>(self)].left = left;
    nodes[static_cast<std::size_t>(self)].right = right;
    return self;
  }
};

}  // namespace

DecisionTree::DecisionTree(std::vector<TreeNode> nodes)
    : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ValidationError("decision tree has no nodes");
}

const std::vector<double>& DecisionTree::leaf_posterior(
    std::span<const double> x) const {
  std::size_t at = 0;
  while (nodes_[at].feature >= 0) {
    const TreeNode& node = nodes_[at];
    at = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.threshold
            ? node.left
            : node.right);
  }
  return nodes_[at].posterior;
}

ForestModel::ForestModel(std::vector<DecisionTree> trees,
                         std::size_t input_dim, int num_classes)
    : trees_(std::move(trees)),
      input_dim_(input_dim),
      num_classes_(num_classes) {
  if (trees_.empty()) throw ValidationError("forest has no trees");
}

PosteriorVector ForestModel::predict(std::span<const double> features) const {
  validate_input(features, input_dim_);
  std::vector<double> acc(static_cast<std::size_t>(num_classes_), 0.0);
  for (const DecisionTree& tree : trees_) {
    const std::vector<double>& p = tree.leaf_posterior(features);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += p[k];
  }
  return renormalized(std::move(acc));
}

nlohmann::json ForestModel::to_json() const {
  nlohmann::json doc;
  doc["kind"] = "forest";
  doc["input_dim"] = input_dim_;
  doc["num_classes"] = num_classes_;
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& node : tree.nodes()) {
      nlohmann::json n;
      if (node.feature < 0) {
        n["posterior"] = node.posterior;
      } else {
        n["feature"] = node.feature;
        n["threshold"] = node.threshold;
        n["left"] = node.left;
        n["right"] = node.right;
      }
      nodes.push_back(std::move(n));
    }
    trees.push_back(nlohmann::json{{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  return doc;
}

std::unique_ptr<Classifier> train_forest_impl(
    const Dataset& data, std::span<const std::size_t> part,
    const TrainConfig& config) {
  Rng rng(config.seed);
  const std::size_t n = part.size();
  const int n_feature_sample = std::max(
      1, static_cast<int>(std::floor(
             std::sqrt(static_cast<double>(data.dimensionality())))));
  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(config.trees));
  for (int t = 0; t < config.trees; ++t) {
    std::vector<std::size_t> bootstrap(n);
    for (std::size_t i = 0; i < n; ++i)
      bootstrap[i] = part[static_cast<std::size_t>(rng.below(n))];
    TreeBuilder builder{data, config.max_depth, n_feature_sample, rng, {}};
    builder.build(bootstrap, 0);
    trees.emplace_back(std::move(builder.nodes));
  }
  return std::make_unique<ForestModel>(std::move(trees), data.dimensionality(),
                                       data.num_classes());
}

}  // namespace mileaks

#include <algorithm>
#include <cmath>

#include "mileaks/learners.hpp"

namespace mileaks {

namespace {

// Layout: logistic = [W (c x d), b (c)]; mlp = [W1 (h x d), b1 (h),
// W2 (c x h), b2 (c)]. Row-major throughout.
std::size_t param_count(const NetSpec& s) {
  const std::size_t d = s.input_dim;
  const std::size_t c = static_cast<std::size_t>(s.num_classes);
  if (s.hidden_units == 0) return c * d + c;
  const std::size_t h = static_cast<std::size_t>(s.hidden_units);
  return h * d + h + c * h + c;
}

void softmax_inplace(std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace

DropoutMasks draw_dropout_masks(Rng& rng, std::size_t batch,
                                const NetSpec& spec, double dropout_input,
                                double dropout_hidden) {
  DropoutMasks masks;
  masks.keep_input = 1.0 - dropout_input;
  masks.keep_hidden = 1.0 - dropout_hidden;
  const std::size_t d = spec.input_dim;
  const std::size_t h = static_cast<std::size_t>(spec.hidden_units);
  // A layer with ratio 0 consumes no randomness, so (0,0) dropout training
  // is bit-identical to undefended training.
  if (dropout_input > 0.0) {
    masks.input.resize(batch * d);
    for (auto& m : masks.input)
      m = rng.uniform01() < masks.keep_input ? 1 : 0;
  }
  if (dropout_hidden > 0.0) {
    masks.hidden.resize(batch * h);
    for (auto& m : masks.hidden)
      m = rng.uniform01() < masks.keep_hidden ? 1 : 0;
  }
  return masks;
}

NetState::NetState(NetSpec spec, Rng& init_stream) : spec_(spec) {
  params_.assign(param_count(spec_), 0.0);
  const std::size_t d = spec_.input_dim;
  const std::size_t c = static_cast<std::size_t>(spec_.num_classes);
  if (spec_.hidden_units == 0) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < c * d; ++i)
      params_[i] = init_stream.uniform(-bound, bound);
  } else {
    const std::size_t h = static_cast<std::size_t>(spec_.hidden_units);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < h * d; ++i)
      params_[i] = init_stream.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(h));
    const std::size_t w2_off = h * d + h;
    for (std::size_t i = 0; i < c * h; ++i)
      params_[w2_off + i] = init_stream.uniform(-bound2, bound2);
  }
}

NetState::NetState(NetSpec spec, std::vector<double> params)
    : spec_(spec), params_(std::move(params)) {
  if (params_.size() != param_count(spec_))
    throw ValidationError("net parameter count mismatch");
}

PosteriorVector NetState::forward(std::span<const double> x) const {
  validate_input(x, spec_.input_dim);
  const std::size_t d = spec_.input_dim;
  const std::size_t c = static_cast<std::size_t>(spec_.num_classes);
  std::vector<double> z(c, 0.0);
  if (spec_.hidden_units == 0) {
    const double* W = params_.data();
    const double* b = W + c * d;
    for (std::size_t k = 0; k < c; ++k) {
      double acc = b[k];
      const double* row = W + k * d;
      for (std::size_t j = 0; j < d; ++j) acc += row[j] * x[j];
      z[k] = acc;
    }
  } else {
    const std::size_t h = static_cast<std::size_t>(spec_.hidden_units);
    const double* W1 = params_.data();
    const double* b1 = W1 + h * d;
    const double* W2 = b1 + h;
    const double* b2 = W2 + c * h;
    std::vector<double> a(h);
    for (std::size_t u = 0; u < h; ++u) {
      double acc = b1[u];
      const double* row = W1 + u * d;
      for (std::size_t j = 0; j < d; ++j) acc += row[j] * x[j];
      a[u] = acc > 0.0 ? acc : 0.0;
    }
    for (std::size_t k = 0; k < c; ++k) {
      double acc = b2[k];
      const double* row = W2 + k * h;
      for (std::size_t u = 0; u < h; ++u) acc += row[u] * a[u];
      z[k] = acc;
    }
  }
  softmax_inplace(z);
  return renormalized(std::move(z));
}

double NetState::batch_loss(const Dataset& data,
                            std::span<const std::size_t> batch, double l2,
                            const DropoutMasks* masks) const {
  if (batch.empty()) throw ValidationError("empty batch");
  if (masks != nullptr && spec_.hidden_units == 0)
    throw ValidationError("dropout applies to mlp learners only");
  const std::size_t d = spec_.input_dim;
  const std::size_t c = static_cast<std::size_t>(spec_.num_classes);
  const std::size_t h = static_cast<std::size_t>(spec_.hidden_units);

  double total = 0.0;
  std::vector<double> xt(d), a(h), z(c);
  for (std::size_t bi = 0; bi < batch.size(); ++bi) {
    const LabeledPoint& pt = data.point(batch[bi]);
    for (std::size_t j = 0; j < d; ++j) {
      double v = pt.features[j];
      if (masks && !masks->input.empty())
        v = masks->input[bi * d + j] ? v / masks->keep_input : 0.0;
      xt[j] = v;
    }
    if (h == 0) {
      const double* W = params_.data();
      const double* b = W + c * d;
      for (std::size_t k = 0; k < c; ++k) {
        double acc = b[k];
        const double* row = W + k * d;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * xt[j];
        z[k] = acc;
      }
    } else {
      const double* W1 = params_.data();
      const double* b1 = W1 + h * d;
      const double* W2 = b1 + h;
      const double* b2 = W2 + c * h;
      for (std::size_t u = 0; u < h; ++u) {
        double acc = b1[u];
        const double* row = W1 + u * d;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * xt[j];
        acc = acc > 0.0 ? acc : 0.0;
        if (masks && !masks->hidden.empty())
          acc = masks->hidden[bi * h + u] ? acc / masks->keep_hidden : 0.0;
        a[u] = acc;
      }
      for (std::size_t k = 0; k < c; ++k) {
        double acc = b2[k];
        const double* row = W2 + k * h;
        for (std::size_t u = 0; u < h; ++u) acc += row[u] * a[u];
        z[k] = acc;
      }
    }
    softmax_inplace(z);
    total += -std::log(z[static_cast<std::size_t>(pt.label)]);
  }
  double loss = total / static_cast<double>(batch.size());
  if (l2 > 0.0) {
    double wsum = 0.0;
    const std::size_t weight_count =
        h == 0 ? c * d : h * d;  // first weight block
    for (std::size_t i = 0; i < weight_count; ++i)
      wsum += params_[i] * params_[i];
    if (h > 0) {
      const std::size_t w2_off = h * d + h;
      for (std::size_t i = 0; i < c * h; ++i)
        wsum += params_[w2_off + i] * params_[w2_off + i];
    }
    loss += 0.5 * l2 * wsum;
  }
  return loss;
}

std::vector<double> NetState::loss_gradient(const Dataset& data,
                                            std::span<const std::size_t> batch,
                                            double l2,
                                            const DropoutMasks* masks) const {
  if (batch.empty()) throw ValidationError("empty batch");
  if (masks != nullptr && spec_.hidden_units == 0)
    throw ValidationError("dropout applies to mlp learners only");
  const std::size_t d = spec_.input_dim;
  const std::size_t c = static_cast<std::size_t>(spec_.num_classes);
  const std::size_t h = static_cast<std::size_t>(spec_.hidden_units);

  std::vector<double> grad(params_.size(), 0.0);
  std::vector<double> xt(d), pre(h), a(h), z(c), da(h);
  for (std::size_t bi = 0; bi < batch.size(); ++bi) {
    const LabeledPoint& pt = data.point(batch[bi]);
    for (std::size_t j = 0; j < d; ++j) {
      double v = pt.features[j];
      if (masks && !masks->input.empty())
        v = masks->input[bi * d + j] ? v / masks->keep_input : 0.0;
      xt[j] = v;
    }
    if (h == 0) {
      const double* W = params_.data();
      const double* b = W + c * d;
      for (std::size_t k = 0; k < c; ++k) {
        double acc = b[k];
        const double* row = W + k * d;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * xt[j];
        z[k] = acc;
      }
      softmax_inplace(z);
      z[static_cast<std::size_t>(pt.label)] -= 1.0;  // dL/dz
      double* gW = grad.data();
      double* gb = gW + c * d;
      for (std::size_t k = 0; k < c; ++k) {
        double* grow = gW + k * d;
        for (std::size_t j = 0; j < d; ++j) grow[j] += z[k] * xt[j];
        gb[k] += z[k];
      }
    } else {
      const double* W1 = params_.data();
      const double* b1 = W1 + h * d;
      const double* W2 = b1 + h;
      const double* b2 = W2 + c * h;
      for (std::size_t u = 0; u < h; ++u) {
        double acc = b1[u];
        const double* row = W1 + u * d;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * xt[j];
        pre[u] = acc;
        acc = acc > 0.0 ? acc : 0.0;
        if (masks && !masks->hidden.empty())
          acc = masks->hidden[bi * h + u] ? acc / masks->keep_hidden : 0.0;
        a[u] = acc;
      }
      for (std::size_t k = 0; k < c; ++k) {
        double acc = b2[k];
        const double* row = W2 + k * h;
        for (std::size_t u = 0; u < h; ++u) acc += row[u] * a[u];
        z[k] = acc;
      }
      softmax_inplace(z);
      z[static_cast<std::size_t>(pt.label)] -= 1.0;

      double* gW1 = grad.data();
      double* gb1 = gW1 + h * d;
      double* gW2 = gb1 + h;
      double* gb2 = gW2 + c * h;
      for (std::size_t u = 0; u < h; ++u) {
        double acc = 0.0;
        for (std::size_t k = 0; k < c; ++k) acc += W2[k * h + u] * z[k];
        // back through hidden dropout, then the rectifier
        if (masks && !masks->hidden.empty())
          acc = masks->hidden[bi * h + u] ? acc / masks->keep_hidden : 0.0;
        da[u] = pre[u] > 0.0 ? acc : 0.0;
      }
      for (std::size_t k = 0; k < c; ++k) {
        double* grow = gW2 + k * h;
        for (std::size_t u = 0; u < h; ++u) grow[u] += z[k] * a[u];
        gb2[k] += z[k];
      }
      for (std::size_t u = 0; u < h; ++u) {
        double* grow = gW1 + u * d;
        for (std::size_t j = 0; j < d; ++j) grow[j] += da[u] * xt[j];
        gb1[u] += da[u];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  if (l2 > 0.0) {
    const std::size_t w1_count = h == 0 ? c * d : h * d;
    for (std::size_t i = 0; i < w1_count; ++i) grad[i] += l2 * params_[i];
    if (h > 0) {
      const std::size_t w2_off = h * d + h;
      for (std::size_t i = 0; i < c * h; ++i)
        grad[w2_off + i] += l2 * params_[w2_off + i];
    }
  }
  return grad;
}

FeedForwardNet::FeedForwardNet(LearnerKind kind, NetState state)
    : kind_(kind), state_(std::move(state)) {
  if (kind_ == LearnerKind::Forest)
    throw ValidationError("FeedForwardNet cannot have forest kind");
  if (kind_ == LearnerKind::Logistic && state_.spec().hidden_units != 0)
    throw ValidationError("logistic net cannot have hidden units");
  if (kind_ == LearnerKind::Mlp && state_.spec().hidden_units == 0)
    throw ValidationError("mlp net needs at least one hidden layer");
}

PosteriorVector FeedForwardNet::predict(std::span<const double> features) const {
  return state_.forward(features);
}

nlohmann::json FeedForwardNet::to_json() const {
  nlohmann::json doc;
  doc["kind"] = to_string(kind_);
  doc["input_dim"] = state_.spec().input_dim;
  doc["num_classes"] = state_.spec().num_classes;
  if (kind_ == LearnerKind::Mlp)
    doc["hidden_units"] = state_.spec().hidden_units;
  doc["params"] = state_.params();
  return doc;
}

}  // namespace mileaks

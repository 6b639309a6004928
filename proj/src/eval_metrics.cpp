#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "mileaks/eval.hpp"
#include "mileaks/jsonio.hpp"

namespace mileaks {

PrecisionRecall precision_recall(std::span<const MembershipLabel> decisions,
                                 std::span<const MembershipLabel> truth) {
  if (decisions.size() != truth.size())
    throw ValidationError("decision and truth lists differ in length");
  if (decisions.empty()) throw ValidationError("empty decision list");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const bool predicted = decisions[i] == MembershipLabel::Member;
    const bool actual = truth[i] == MembershipLabel::Member;
    if (predicted && actual) ++tp;
    if (predicted && !actual) ++fp;
    if (!predicted && actual) ++fn;
  }
  PrecisionRecall out;
  if (tp + fp == 0) {
    out.precision = 0.0;
    out.precision_defined = false;
  } else {
    out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    out.recall = 0.0;
    out.recall_defined = false;
  } else {
    out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  return out;
}

namespace {

// 1-based ranks, ties averaged
std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double auc(std::span<const double> scores,
           std::span<const MembershipLabel> truth) {
  if (scores.size() != truth.size())
    throw ValidationError("score and truth lists differ in length");
  std::size_t n1 = 0;
  for (MembershipLabel label : truth)
    if (label == MembershipLabel::Member) ++n1;
  const std::size_t n0 = truth.size() - n1;
  if (n1 == 0 || n0 == 0)
    throw ValidationError("auc needs both member and non-member truth");
  const std::vector<double> ranks = average_ranks(scores);
  double member_rank_sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == MembershipLabel::Member) member_rank_sum += ranks[i];
  const double u = member_rank_sum -
                   static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw ValidationError("spearman inputs differ in length");
  if (xs.size() < 2) throw ValidationError("spearman needs at least 2 points");
  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

double overfitting_level(const Predictor& model, const Dataset& data,
                         std::span<const std::size_t> train_part,
                         std::span<const std::size_t> test_part) {
  if (train_part.empty() || test_part.empty())
    throw ValidationError("overfitting level needs non-empty parts");
  std::set<std::size_t> train_set(train_part.begin(), train_part.end());
  for (std::size_t idx : test_part)
    if (train_set.contains(idx))
      throw ValidationError("overfitting level parts overlap at index " +
                            std::to_string(idx));
  return accuracy(model, data, train_part) - accuracy(model, data, test_part);
}

nlohmann::json AttackReport::to_json() const {
  nlohmann::json doc{{"precision", precision},
                     {"recall", recall},
                     {"precision_defined", precision_defined},
                     {"recall_defined", recall_defined},
                     {"target_train_accuracy", target_train_accuracy},
                     {"target_test_accuracy", target_test_accuracy},
                     {"overfitting_level", overfitting_level},
                     {"query_cost", query_cost}};
  doc["auc"] = auc ? nlohmann::json(*auc) : nlohmann::json(nullptr);
  if (axis_value) {
    doc["axis_name"] = axis_name;
    doc["axis_value"] = *axis_value;
  }
  if (!manifest_ref.empty()) doc["manifest_ref"] = manifest_ref;
  return doc;
}

namespace {

std::string fmt(double v) { return format_g12(v); }

std::string axis_cell(const AttackReport& r) {
  if (!r.axis_value) return "";
  if (r.axis_value->is_number()) return format_g12(r.axis_value->get<double>());
  return r.axis_value->dump();
}

}  // namespace

std::string reports_to_csv(std::span<const AttackReport> reports) {
  std::ostringstream out;
  out << "axis,precision,recall,auc,target_train_accuracy,"
         "target_test_accuracy,overfitting_level,query_cost\n";
  for (const AttackReport& r : reports) {
    std::string axis = axis_cell(r);
    // the axis cell may itself hold a JSON pair; keep the CSV unambiguous
    if (axis.find(',') != std::string::npos) {
      std::string quoted = "\"";
      quoted += axis;
      quoted += "\"";
      axis = std::move(quoted);
    }
    out << axis << ',' << fmt(r.precision) << ',' << fmt(r.recall) << ','
        << (r.auc ? fmt(*r.auc) : std::string()) << ','
        << fmt(r.target_train_accuracy) << ',' << fmt(r.target_test_accuracy)
        << ',' << fmt(r.overfitting_level) << ',' << r.query_cost << '\n';
  }
  return out.str();
}

std::string reports_to_table(std::span<const AttackReport> reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %9s %9s %9s %9s %9s %9s %10s\n",
                "axis", "precision", "recall", "auc", "train_acc", "test_acc",
                "overfit", "queries");
  out << line;
  for (const AttackReport& r : reports) {
    const std::string axis = axis_cell(r);
    const std::string auc_str =
        r.auc ? std::to_string(*r.auc).substr(0, 6) : std::string("-");
    std::snprintf(line, sizeof(line),
                  "%-16s %9.4f %9.4f %9s %9.4f %9.4f %9.4f %10llu\n",
                  axis.c_str(), r.precision, r.recall, auc_str.c_str(),
                  r.target_train_accuracy, r.target_test_accuracy,
                  r.overfitting_level,
                  static_cast<unsigned long long>(r.query_cost));
    out << line;
  }
  return out.str();
}

}  // namespace mileaks

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mileaks/attacks.hpp"
#include "mileaks/core.hpp"
#include "mileaks/datasets.hpp"
#include "mileaks/defenses.hpp"

namespace mileaks {

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  // false when the corresponding denominator was zero (reported as 0,
  // flagged instead of thrown so sweeps keep going)
  bool precision_defined = true;
  bool recall_defined = true;
};

// Member is the positive class.
PrecisionRecall precision_recall(std::span<const MembershipLabel> decisions,
                                 std::span<const MembershipLabel> truth);

// Mann-Whitney formulation: fraction of (member, non-member) pairs where
// the member scores higher, ties at half credit. Needs both classes.
double auc(std::span<const double> scores,
           std::span<const MembershipLabel> truth);

// Rank correlation with average ranks on ties; 0 when an input is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

// accuracy(train) - accuracy(test); parts must be disjoint.
double overfitting_level(const Predictor& model, const Dataset& data,
                         std::span<const std::size_t> train_part,
                         std::span<const std::size_t> test_part);

struct AttackReport {
  double precision = 0.0;
  double recall = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
  std::optional<double> auc;
  double target_train_accuracy = 0.0;
  double target_test_accuracy = 0.0;
  double overfitting_level = 0.0;
  std::uint64_t query_cost = 0;
  std::string axis_name;                   // sweeps only
  std::optional<nlohmann::json> axis_value;
  std::string manifest_ref;

  nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Experiment description (the CLI's spec-file form mirrors this 1:1).

struct DatasetSource {
  std::optional<std::string> csv_path;
  bool has_header = false;
  LabelColumn label_column = std::size_t{0};
  bool label_column_set = false;  // false -> last column
  std::optional<SyntheticSpec> synthetic;
  std::optional<FeatureSpaceKind> feature_space_override;

  Dataset build(const std::string& name) const;
  static DatasetSource from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct DefenseSpec {
  enum class Kind { None, Dropout, Stacking } kind = Kind::None;
  double dropout_input = 0.5;
  double dropout_hidden = 0.5;
  std::optional<TrainConfig> base1, base2, meta;  // stacking

  static DefenseSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct AdversarySpec {
  enum class Kind { Adversary1, Combining, Adversary2, Adversary3 } kind =
      Kind::Adversary1;
  TrainConfig shadow;
  TrainConfig attack;
  std::size_t k_posteriors = 0;  // 0 -> default min(3, c)
  int num_shadows = 1;           // adversary 1 pooled-shadow axis
  std::vector<TrainConfig> sub_shadows;          // combining
  std::optional<DatasetSource> shadow_dataset;   // adversary 2
  std::uint64_t shadow_split_seed = 0;           // adversary 2
  double t_percent = 10.0;                       // adversary 3
  std::size_t n_probes = 1000;                   // adversary 3
  std::uint64_t probe_seed = 0;                  // adversary 3
  StatKind statistic = StatKind::Max;            // adversary 3
  std::optional<double> fixed_threshold;         // adversary 3

  static AdversarySpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct ExperimentSpec {
  std::string name;
  DatasetSource dataset;
  std::uint64_t split_seed = 0;
  TrainConfig target;
  DefenseSpec defense;
  AdversarySpec adversary;
  std::optional<std::string> target_address;  // attack a served model
  std::optional<std::string> output;          // report/manifest path prefix

  static ExperimentSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

// Applies MILEAKS_SEED (when set) over every seed in the spec.
void override_seeds(ExperimentSpec& spec, std::uint64_t seed);

struct ExperimentResult {
  AttackReport report;
  nlohmann::json manifest;  // everything needed to reproduce the run
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

enum class SweepAxis { Epochs, NumShadowModels, KPosteriors, DropoutGrid,
                       TPercentile };

SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis axis);

// One experiment per value, sharing the base spec and seeds; points are
// independent and may run on up to `jobs` threads.
std::vector<ExperimentResult> sweep(const ExperimentSpec& spec, SweepAxis axis,
                                    const std::vector<nlohmann::json>& values,
                                    int jobs = 1);

std::string reports_to_csv(std::span<const AttackReport> reports);
std::string reports_to_table(std::span<const AttackReport> reports);

}  // namespace mileaks

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mileaks/core.hpp"

namespace mileaks {

// Desk-scale stand-ins for the evaluation corpora: clamped Gaussian blobs
// (unit_interval), noisy template patterns on the hypercube (binary), and
// flat template images with uniform pixel noise (unit_interval).
struct SyntheticSpec {
  enum class Kind { GaussianBlobs, BinaryHypercube, GridImages };

  Kind kind = Kind::GaussianBlobs;
  std::size_t num_points = 0;
  int num_classes = 0;
  std::size_t dimensionality = 0;
  double class_separation = 1.0;
  double noise = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  static SyntheticSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

Dataset generate(const SyntheticSpec& spec);

// Label column selector: zero-based index or header name.
using LabelColumn = std::variant<std::size_t, std::string>;

Dataset load_csv(const std::string& path, bool has_header,
                 const LabelColumn& label_column,
                 std::optional<FeatureSpaceKind> kind_override = {},
                 const std::string& name = "csv");

// Unlabeled ingestion (every column is a feature); used for class derivation.
std::vector<std::vector<double>> load_csv_features(const std::string& path,
                                                   bool has_header);

// Column count of the first data row; cells are not parsed.
std::size_t csv_arity(const std::string& path, bool has_header);

// One row per point, features (12 significant digits) then the label.
void save_csv(const Dataset& data, const std::string& path);

// Lloyd's algorithm. Centers start at k distinct points picked from the
// seeded stream; nearest-center ties break toward the lowest center index;
// an empty cluster is reseeded with the point farthest from its center.
std::vector<int> kmeans(const std::vector<std::vector<double>>& features,
                        int k, std::uint64_t seed, int max_iters);

// Same, also reporting the within-cluster squared error after each
// iteration (non-increasing).
struct KmeansResult {
  std::vector<int> labels;
  std::vector<double> error_trace;
};
KmeansResult kmeans_detailed(const std::vector<std::vector<double>>& features,
                             int k, std::uint64_t seed, int max_iters);

// Seeded shuffle, then four quarters in order: shadow_train, shadow_out,
// target_train, target_out. Earlier parts take the remainder.
SplitPlan plan_standard_split(const Dataset& data, std::uint64_t seed);

// Seeded shuffle, then 12 near-equal contiguous parts t1..t6, s1..s6.
SplitPlan plan_stacking_split(const Dataset& data, std::uint64_t seed);

nlohmann::json split_plan_to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const nlohmann::json& doc);

}  // namespace mileaks

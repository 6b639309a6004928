#include "mileaks/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "mileaks/jsonio.hpp"
#include "mileaks/rng.hpp"

namespace mileaks {

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

FeatureSpaceKind infer_kind(const std::vector<LabeledPoint>& points) {
  bool all_binary = true;
  bool all_unit = true;
  for (const auto& pt : points)
    for (double v : pt.features) {
      if (v != 0.0 && v != 1.0) all_binary = false;
      if (v < 0.0 || v > 1.0) all_unit = false;
    }
  if (all_binary) return FeatureSpaceKind::Binary;
  if (all_unit) return FeatureSpaceKind::UnitInterval;
  return FeatureSpaceKind::Unbounded;
}

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end != begin && *end == '\0' && std::isfinite(out);
}

bool parse_nonneg_int(const std::string& cell, long long& out) {
  if (cell.empty()) return false;
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtoll(begin, &end, 10);
  return end != begin && *end == '\0' && out >= 0;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path,
                                                bool has_header,
                                                std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_row(line);
    if (first && has_header) {
      if (header != nullptr) *header = cells;
      first = false;
      continue;
    }
    first = false;
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw ValidationError("empty CSV file: " + path);
  const std::size_t arity = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].size() != arity)
      throw ValidationError("ragged CSV row " + std::to_string(r + 1) +
                            " in " + path);
  return rows;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (num_classes < 2)
    throw ValidationError("synthetic spec needs at least 2 classes");
  if (num_points < static_cast<std::size_t>(num_classes))
    throw ValidationError("synthetic spec needs num_points >= num_classes");
  if (dimensionality < 1)
    throw ValidationError("synthetic spec needs dimensionality >= 1");
  if (class_separation < 0.0 || !std::isfinite(class_separation))
    throw ValidationError("class_separation must be non-negative");
  if (noise < 0.0 || !std::isfinite(noise))
    throw ValidationError("noise must be non-negative");
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& doc) {
  check_keys(doc,
             {"kind", "num_points", "num_classes", "dimensionality",
              "class_separation", "noise", "seed"},
             "synthetic spec");
  SyntheticSpec spec;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "gaussian_blobs")
    spec.kind = Kind::GaussianBlobs;
  else if (kind == "binary_hypercube")
    spec.kind = Kind::BinaryHypercube;
  else if (kind == "grid_images")
    spec.kind = Kind::GridImages;
  else
    throw ValidationError("unknown synthetic kind: " + kind);
  spec.num_points = doc.at("num_points").get<std::size_t>();
  spec.num_classes = doc.at("num_classes").get<int>();
  spec.dimensionality = doc.at("dimensionality").get<std::size_t>();
  spec.class_separation = doc.value("class_separation", 1.0);
  spec.noise = doc.value("noise", 0.0);
  spec.seed = doc.value("seed", std::uint64_t{0});
  spec.validate();
  return spec;
}

nlohmann::json SyntheticSpec::to_json() const {
  const char* kind_name = kind == Kind::GaussianBlobs     ? "gaussian_blobs"
                          : kind == Kind::BinaryHypercube ? "binary_hypercube"
                                                          : "grid_images";
  return nlohmann::json{{"kind", kind_name},
                        {"num_points", num_points},
                        {"num_classes", num_classes},
                        {"dimensionality", dimensionality},
                        {"class_separation", class_separation},
                        {"noise", noise},
                        {"seed", seed}};
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t d = spec.dimensionality;
  const std::size_t c = static_cast<std::size_t>(spec.num_classes);
  std::vector<LabeledPoint> points;
  points.reserve(spec.num_points);

  switch (spec.kind) {
    case SyntheticSpec::Kind::GaussianBlobs: {
      // Centers drawn once; offsets from the cube midpoint are scaled by
      // class_separation, then clamped, so pairwise center distance scales
      // with the separation knob.
      std::vector<std::vector<double>> centers(c, std::vector<double>(d));
      for (auto& center : centers)
        for (double& v : center)
          v = clamp01(0.5 + spec.class_separation * (rng.uniform01() - 0.5));
      for (std::size_t i = 0; i < spec.num_points; ++i) {
        const std::size_t cls = i % c;
        LabeledPoint pt;
        pt.label = static_cast<int>(cls);
        pt.features.resize(d);
        for (std::size_t j = 0; j < d; ++j)
          pt.features[j] = clamp01(centers[cls][j] + spec.noise * rng.normal());
        points.push_back(std::move(pt));
      }
      return Dataset(std::move(points), spec.num_classes,
                     {FeatureSpaceKind::UnitInterval, d}, "gaussian_blobs");
    }
    case SyntheticSpec::Kind::BinaryHypercube: {
      std::vector<std::vector<double>> templates(c, std::vector<double>(d));
      for (auto& tpl : templates)
        for (double& v : tpl) v = rng.coin() ? 1.0 : 0.0;
      for (std::size_t i = 0; i < spec.num_points; ++i) {
        const std::size_t cls = i % c;
        LabeledPoint pt;
        pt.label = static_cast<int>(cls);
        pt.features.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
          const bool flip = rng.uniform01() < spec.noise;
          pt.features[j] = flip ? 1.0 - templates[cls][j] : templates[cls][j];
        }
        points.push_back(std::move(pt));
      }
      return Dataset(std::move(points), spec.num_classes,
                     {FeatureSpaceKind::Binary, d}, "binary_hypercube");
    }
    case SyntheticSpec::Kind::GridImages: {
      std::vector<std::vector<double>> templates(c, std::vector<double>(d));
      for (auto& tpl : templates)
        for (double& v : tpl) v = rng.uniform01();
      for (std::size_t i = 0; i < spec.num_points; ++i) {
        const std::size_t cls = i % c;
        LabeledPoint pt;
        pt.label = static_cast<int>(cls);
        pt.features.resize(d);
        for (std::size_t j = 0; j < d; ++j)
          pt.features[j] =
              clamp01(templates[cls][j] + spec.noise * rng.uniform(-1.0, 1.0));
        points.push_back(std::move(pt));
      }
      return Dataset(std::move(points), spec.num_classes,
                     {FeatureSpaceKind::UnitInterval, d}, "grid_images");
    }
  }
  throw ValidationError("unknown synthetic kind");
}

Dataset load_csv(const std::string& path, bool has_header,
                 const LabelColumn& label_column,
                 std::optional<FeatureSpaceKind> kind_override,
                 const std::string& name) {
  std::vector<std::string> header;
  const auto rows = read_rows(path, has_header, &header);
  const std::size_t arity = rows.front().size();

  std::size_t label_idx;
  if (std::holds_alternative<std::size_t>(label_column)) {
    label_idx = std::get<std::size_t>(label_column);
  } else {
    const std::string& want = std::get<std::string>(label_column);
    if (!has_header)
      throw ValidationError("label column by name requires a header row");
    auto it = std::find(header.begin(), header.end(), want);
    if (it == header.end())
      throw ValidationError("label column '" + want + "' not in header");
    label_idx = static_cast<std::size_t>(it - header.begin());
  }
  if (label_idx >= arity)
    throw ValidationError("label column " + std::to_string(label_idx) +
                          " out of range (row arity " + std::to_string(arity) +
                          ")");
  if (arity < 2)
    throw ValidationError("CSV rows need at least one feature and a label");

  // Integer labels pass through unchanged (so written files round-trip
  // exactly); anything else densifies by first occurrence.
  bool all_int = true;
  for (const auto& row : rows) {
    long long v;
    if (!parse_nonneg_int(row[label_idx], v)) {
      all_int = false;
      break;
    }
  }

  std::vector<LabeledPoint> points;
  points.reserve(rows.size());
  std::map<std::string, int> label_map;
  int max_label = -1;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    LabeledPoint pt;
    pt.features.reserve(arity - 1);
    for (std::size_t col = 0; col < arity; ++col) {
      if (col == label_idx) continue;
      double v;
      if (!parse_double(rows[r][col], v))
        throw ValidationError("non-numeric feature cell '" + rows[r][col] +
                              "' at row " + std::to_string(r + 1));
      pt.features.push_back(v);
    }
    if (all_int) {
      long long v = 0;
      parse_nonneg_int(rows[r][label_idx], v);
      pt.label = static_cast<int>(v);
    } else {
      auto [it, inserted] = label_map.try_emplace(
          rows[r][label_idx], static_cast<int>(label_map.size()));
      pt.label = it->second;
    }
    max_label = std::max(max_label, pt.label);
    points.push_back(std::move(pt));
  }

  const int num_classes =
      all_int ? max_label + 1 : static_cast<int>(label_map.size());
  const FeatureSpaceKind kind =
      kind_override ? *kind_override : infer_kind(points);
  return Dataset(std::move(points), num_classes,
                 {kind, points.front().features.size()}, name);
}

std::vector<std::vector<double>> load_csv_features(const std::string& path,
                                                   bool has_header) {
  const auto rows = read_rows(path, has_header, nullptr);
  std::vector<std::vector<double>> features;
  features.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> row;
    row.reserve(rows[r].size());
    for (const std::string& cell : rows[r]) {
      double v;
      if (!parse_double(cell, v))
        throw ValidationError("non-numeric feature cell '" + cell +
                              "' at row " + std::to_string(r + 1));
      row.push_back(v);
    }
    features.push_back(std::move(row));
  }
  return features;
}

std::size_t csv_arity(const std::string& path, bool has_header) {
  return read_rows(path, has_header, nullptr).front().size();
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  for (const auto& pt : data.points()) {
    for (double v : pt.features) out << format_g12(v) << ',';
    out << pt.label << '\n';
  }
}

KmeansResult kmeans_detailed(const std::vector<std::vector<double>>& features,
                             int k, std::uint64_t seed, int max_iters) {
  const std::size_t n = features.size();
  if (k < 1) throw ValidationError("kmeans needs k >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw ValidationError("kmeans needs k <= number of points");
  if (max_iters < 1) throw ValidationError("kmeans needs max_iters >= 1");
  const std::size_t d = n > 0 ? features.front().size() : 0;
  for (const auto& f : features)
    if (f.size() != d) throw ValidationError("kmeans feature arity mismatch");

  const auto sqdist = [&](const std::vector<double>& a,
                          const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double diff = a[j] - b[j];
      acc += diff * diff;
    }
    return acc;
  };

  Rng rng(seed);
  // k distinct points as initial centers
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::vector<double>> centers;
  centers.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        static_cast<std::size_t>(rng.below(n - static_cast<std::size_t>(i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    centers.push_back(features[pool[static_cast<std::size_t>(i)]]);
  }

  KmeansResult result;
  result.labels.assign(n, -1);
  std::vector<int> labels(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = sqdist(features[i], centers[0]);
      for (int cl = 1; cl < k; ++cl) {
        const double dist = sqdist(features[i], centers[static_cast<std::size_t>(cl)]);
        if (dist < best_dist) {  // strict: ties keep the lowest index
          best_dist = dist;
          best = cl;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }

    // reseed empty clusters with the globally farthest point
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int lbl : labels) ++sizes[static_cast<std::size_t>(lbl)];
    for (int cl = 0; cl < k; ++cl) {
      if (sizes[static_cast<std::size_t>(cl)] != 0) continue;
      std::size_t far = 0;
      double far_dist = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dist =
            sqdist(features[i], centers[static_cast<std::size_t>(labels[i])]);
        if (dist > far_dist) {
          far_dist = dist;
          far = i;
        }
      }
      centers[static_cast<std::size_t>(cl)] = features[far];
      --sizes[static_cast<std::size_t>(labels[far])];
      labels[far] = cl;
      sizes[static_cast<std::size_t>(cl)] = 1;
      changed = true;
    }

    double error = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      error += sqdist(features[i], centers[static_cast<std::size_t>(labels[i])]);
    result.error_trace.push_back(error);

    if (!changed) break;

    for (auto& center : centers) std::fill(center.begin(), center.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        centers[static_cast<std::size_t>(labels[i])][j] += features[i][j];
    for (int cl = 0; cl < k; ++cl)
      for (std::size_t j = 0; j < d; ++j)
        centers[static_cast<std::size_t>(cl)][j] /=
            static_cast<double>(sizes[static_cast<std::size_t>(cl)]);
  }
  result.labels = std::move(labels);
  return result;
}

std::vector<int> kmeans(const std::vector<std::vector<double>>& features,
                        int k, std::uint64_t seed, int max_iters) {
  return kmeans_detailed(features, k, seed, max_iters).labels;
}

namespace {

SplitPlan contiguous_plan(const Dataset& data, std::uint64_t seed,
                          const std::vector<std::string>& names,
                          const std::vector<std::size_t>& sizes) {
  Rng rng(seed);
  const std::vector<std::size_t> perm = rng.permutation(data.size());
  std::map<std::string, std::vector<std::size_t>> parts;
  std::size_t at = 0;
  for (std::size_t p = 0; p < names.size(); ++p) {
    std::vector<std::size_t> indices(perm.begin() + static_cast<long>(at),
                                     perm.begin() +
                                         static_cast<long>(at + sizes[p]));
    // canonical sorted order so a plan round-trips through its artifact
    std::sort(indices.begin(), indices.end());
    parts.emplace(names[p], std::move(indices));
    at += sizes[p];
  }
  return SplitPlan(std::move(parts), data.size());
}

}  // namespace

SplitPlan plan_standard_split(const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 8)
    throw ValidationError("standard split needs at least 8 points, got " +
                          std::to_string(n));
  const std::size_t shadow_half = (n + 1) / 2;
  const std::size_t target_half = n - shadow_half;
  const std::vector<std::size_t> sizes{
      (shadow_half + 1) / 2, shadow_half - (shadow_half + 1) / 2,
      (target_half + 1) / 2, target_half - (target_half + 1) / 2};
  return contiguous_plan(data, seed,
                         {"shadow_train", "shadow_out", "target_train",
                          "target_out"},
                         sizes);
}

SplitPlan plan_stacking_split(const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 24)
    throw ValidationError("stacking split needs at least 24 points, got " +
                          std::to_string(n));
  std::vector<std::string> names{"t1", "t2", "t3", "t4", "t5", "t6",
                                 "s1", "s2", "s3", "s4", "s5", "s6"};
  std::vector<std::size_t> sizes(12, n / 12);
  for (std::size_t p = 0; p < n % 12; ++p) ++sizes[p];
  return contiguous_plan(data, seed, names, sizes);
}

nlohmann::json split_plan_to_json(const SplitPlan& plan) {
  nlohmann::json parts = nlohmann::json::object();
  for (const auto& [name, indices] : plan.parts()) {
    std::vector<std::size_t> sorted(indices);
    std::sort(sorted.begin(), sorted.end());
    parts[name] = sorted;
  }
  return nlohmann::json{{"dataset_size", plan.dataset_size()},
                        {"parts", std::move(parts)}};
}

SplitPlan split_plan_from_json(const nlohmann::json& doc) {
  check_keys(doc, {"dataset_size", "parts"}, "split plan");
  std::map<std::string, std::vector<std::size_t>> parts;
  for (auto it = doc.at("parts").begin(); it != doc.at("parts").end(); ++it)
    parts.emplace(it.key(), it.value().get<std::vector<std::size_t>>());
  return SplitPlan(std::move(parts), doc.at("dataset_size").get<std::size_t>());
}

}  // namespace mileaks

// mileaks: membership-inference attack laboratory CLI.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mileaks/blackbox.hpp"
#include "mileaks/config_json.hpp"
#include "mileaks/datasets.hpp"
#include "mileaks/defenses.hpp"
#include "mileaks/eval.hpp"
#include "mileaks/jsonio.hpp"
#include "mileaks/rng.hpp"

namespace {

using namespace mileaks;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitTransport = 4;

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("MILEAKS_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0')
    throw ValidationError("MILEAKS_SEED must be an unsigned integer");
  return value;
}

LabelColumn resolve_label_column(const std::optional<std::string>& flag,
                                 const std::string& csv_path, bool has_header) {
  if (!flag) return csv_arity(csv_path, has_header) - 1;  // default: last
  try {
    const std::size_t idx = std::stoul(*flag);
    if (std::to_string(idx) == *flag) return idx;
  } catch (const std::exception&) {
  }
  return *flag;  // a column name
}

std::vector<nlohmann::json> parse_values(const std::string& raw) {
  std::vector<nlohmann::json> values;
  if (!raw.empty() && raw.front() == '[') {
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("invalid --values JSON: ") + e.what());
    }
    if (!arr.is_array()) throw ValidationError("--values must be an array");
    for (const auto& v : arr) values.push_back(v);
    return values;
  }
  std::size_t at = 0;
  while (at <= raw.size()) {
    const std::size_t comma = raw.find(',', at);
    const std::string cell = raw.substr(
        at, comma == std::string::npos ? std::string::npos : comma - at);
    if (cell.empty()) throw ValidationError("empty entry in --values");
    try {
      values.push_back(nlohmann::json::parse(cell));
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("cannot parse --values entry '" + cell + "'");
    }
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return values;
}

void write_reports(const std::string& prefix, SweepAxis axis,
                   const std::vector<ExperimentResult>& results) {
  std::vector<AttackReport> reports;
  nlohmann::json series_reports = nlohmann::json::array();
  nlohmann::json manifests = nlohmann::json::array();
  for (const ExperimentResult& r : results) {
    AttackReport report = r.report;
    report.manifest_ref = prefix + ".manifests.json";
    reports.push_back(report);
    series_reports.push_back(report.to_json());
    manifests.push_back(r.manifest);
  }
  write_json_file(prefix + ".series.json",
                  nlohmann::json{{"axis", to_string(axis)},
                                 {"reports", series_reports}});
  write_json_file(prefix + ".manifests.json", manifests);
  std::ofstream csv(prefix + ".csv");
  if (!csv) throw ValidationError("cannot write file: " + prefix + ".csv");
  csv << reports_to_csv(reports);
  std::cout << reports_to_table(reports);
}

int run(int argc, char** argv) {
  CLI::App app{"mileaks: membership-inference attacks and defenses"};
  app.require_subcommand(1);

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
  std::string gen_spec_path, gen_out;
  gen->add_option("--spec", gen_spec_path, "synthetic spec JSON")->required();
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // --- kmeans ---
  auto* km = app.add_subcommand("kmeans", "derive classes via k-means");
  std::string km_in, km_out;
  int km_k = 2, km_max_iters = 100;
  std::uint64_t km_seed = 0;
  bool km_header = false;
  km->add_option("--in", km_in, "input CSV (all columns are features)")
      ->required();
  km->add_option("--k", km_k, "number of clusters")->required();
  km->add_option("--seed", km_seed, "seed")->required();
  km->add_option("--out", km_out, "output CSV path")->required();
  km->add_option("--max-iters", km_max_iters, "iteration cap");
  km->add_flag("--has-header", km_header, "skip a header row");

  // --- train ---
  auto* tr = app.add_subcommand("train", "train a classifier or stacked model");
  std::string tr_data, tr_config, tr_out, tr_space;
  std::optional<std::string> tr_label;
  bool tr_header = false;
  tr->add_option("--data", tr_data, "training CSV")->required();
  tr->add_option("--config", tr_config, "train config JSON")->required();
  tr->add_option("--out", tr_out, "model output path")->required();
  tr->add_option("--label-column", tr_label, "label column index or name");
  tr->add_option("--feature-space", tr_space,
                 "override inferred kind (unit_interval|binary|unbounded)");
  tr->add_flag("--has-header", tr_header, "skip a header row");

  // --- serve ---
  auto* sv = app.add_subcommand("serve", "serve a model as a black-box API");
  std::string sv_model, sv_addr;
  sv->add_option("--model", sv_model, "model file")->required();
  sv->add_option("--addr", sv_addr, "host:port")->required();

  // --- attack ---
  auto* at = app.add_subcommand("attack", "run one experiment");
  std::string at_spec;
  std::optional<std::string> at_out;
  at->add_option("--spec", at_spec, "experiment spec JSON")->required();
  at->add_option("--out", at_out, "output path prefix");

  // --- sweep ---
  auto* sw = app.add_subcommand("sweep", "run an experiment series");
  std::string sw_spec, sw_axis, sw_values;
  std::optional<std::string> sw_out;
  int sw_jobs = 1;
  sw->add_option("--spec", sw_spec, "experiment spec JSON")->required();
  sw->add_option("--axis", sw_axis,
                 "epochs|num_shadow_models|k_posteriors|dropout_grid|"
                 "t_percentile")
      ->required();
  sw->add_option("--values", sw_values, "axis values (CSV list or JSON array)")
      ->required();
  sw->add_option("--out", sw_out, "output path prefix");
  sw->add_option("--jobs", sw_jobs, "parallel sweep points");

  // --- report ---
  auto* rp = app.add_subcommand("report", "render a report series");
  std::string rp_in, rp_format = "table";
  rp->add_option("--in", rp_in, "series JSON from sweep")->required();
  rp->add_option("--format", rp_format, "csv|table")
      ->check(CLI::IsMember({"csv", "table"}));

  app.parse(argc, argv);

  if (gen->parsed()) {
    const SyntheticSpec spec =
        SyntheticSpec::from_json(parse_json_file(gen_spec_path));
    save_csv(generate(spec), gen_out);
    std::cout << "wrote " << gen_out << "\n";
    return 0;
  }

  if (km->parsed()) {
    const auto features = load_csv_features(km_in, km_header);
    const auto labels = kmeans(features, km_k, km_seed, km_max_iters);
    std::ofstream out(km_out);
    if (!out) throw ValidationError("cannot write file: " + km_out);
    for (std::size_t i = 0; i < features.size(); ++i) {
      for (double v : features[i]) out << format_g12(v) << ',';
      out << labels[i] << '\n';
    }
    std::cout << "wrote " << km_out << "\n";
    return 0;
  }

  if (tr->parsed()) {
    std::optional<FeatureSpaceKind> space;
    if (!tr_space.empty()) space = feature_space_kind_from_string(tr_space);
    const Dataset data =
        load_csv(tr_data, tr_header,
                 resolve_label_column(tr_label, tr_data, tr_header), space);
    const nlohmann::json config = parse_json_file(tr_config);
    if (config.contains("kind") && config.at("kind") == "stacked") {
      check_keys(config, {"kind", "base1", "base2", "meta", "seed"},
                 "stacked train config");
      const std::uint64_t seed = config.value("seed", std::uint64_t{0});
      // three near-equal contiguous parts of a seeded shuffle
      Rng rng(seed);
      const auto perm = rng.permutation(data.size());
      const std::size_t third = data.size() / 3;
      if (third == 0)
        throw ValidationError("stacked training needs at least 3 points");
      std::vector<std::size_t> p1(perm.begin(), perm.begin() + third);
      std::vector<std::size_t> p2(perm.begin() + third,
                                  perm.begin() + 2 * third);
      std::vector<std::size_t> p3(perm.begin() + 2 * third, perm.end());
      auto model = train_stacked(
          data, p1, p2, p3, train_config_from_json(config.at("base1")),
          train_config_from_json(config.at("base2")),
          train_config_from_json(config.at("meta")), seed);
      model->set_part_names({"part1", "part2", "part3"});
      model->save(tr_out);
    } else {
      std::vector<std::size_t> all(data.size());
      std::iota(all.begin(), all.end(), 0);
      const auto model = train(data, all, train_config_from_json(config));
      model->save(tr_out);
    }
    std::cout << "wrote " << tr_out << "\n";
    return 0;
  }

  if (sv->parsed()) {
    const nlohmann::json doc = parse_json_file(sv_model);
    std::shared_ptr<const Predictor> model;
    if (doc.value("kind", "") == "stacked")
      model = StackedModel::from_json(doc);
    else
      model = Classifier::from_json(doc);
    const auto [host, port] = parse_address(sv_addr);
    BlackBoxServer server(std::make_shared<ModelBlackBox>(model));
    const int bound = server.start(host, port);
    std::cout << "serving on " << host << ":" << bound << "\n" << std::flush;
    server.wait();
    return 0;
  }

  if (at->parsed()) {
    ExperimentSpec spec = ExperimentSpec::from_json(parse_json_file(at_spec));
    if (const auto seed = env_seed()) override_seeds(spec, *seed);
    const std::string prefix =
        at_out ? *at_out : spec.output.value_or("report");
    ExperimentResult result = run_experiment(spec);
    result.report.manifest_ref = prefix + ".manifest.json";
    write_json_file(prefix + ".report.json", result.report.to_json());
    write_json_file(prefix + ".manifest.json", result.manifest);
    const AttackReport reports[] = {result.report};
    std::cout << reports_to_table(reports);
    return 0;
  }

  if (sw->parsed()) {
    ExperimentSpec spec = ExperimentSpec::from_json(parse_json_file(sw_spec));
    if (const auto seed = env_seed()) override_seeds(spec, *seed);
    const SweepAxis axis = sweep_axis_from_string(sw_axis);
    const auto values = parse_values(sw_values);
    const auto results = sweep(spec, axis, values, sw_jobs);
    const std::string prefix =
        sw_out ? *sw_out : spec.output.value_or("sweep");
    write_reports(prefix, axis, results);
    return 0;
  }

  if (rp->parsed()) {
    const nlohmann::json doc = parse_json_file(rp_in);
    if (!doc.contains("reports"))
      throw ValidationError("series file has no 'reports' array");
    std::vector<AttackReport> reports;
    for (const auto& rj : doc.at("reports")) {
      AttackReport r;
      r.precision = rj.at("precision").get<double>();
      r.recall = rj.at("recall").get<double>();
      r.precision_defined = rj.value("precision_defined", true);
      r.recall_defined = rj.value("recall_defined", true);
      if (rj.contains("auc") && !rj.at("auc").is_null())
        r.auc = rj.at("auc").get<double>();
      r.target_train_accuracy = rj.value("target_train_accuracy", 0.0);
      r.target_test_accuracy = rj.value("target_test_accuracy", 0.0);
      r.overfitting_level = rj.value("overfitting_level", 0.0);
      r.query_cost = rj.value("query_cost", std::uint64_t{0});
      if (rj.contains("axis_value")) {
        r.axis_name = rj.value("axis_name", "");
        r.axis_value = rj.at("axis_value");
      }
      reports.push_back(std::move(r));
    }
    std::cout << (rp_format == "csv" ? reports_to_csv(reports)
                                     : reports_to_table(reports));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << "error[validation]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const TransportError& e) {
    std::cerr << "error[transport]: " << e.what() << "\n";
    return kExitTransport;
  } catch (const NumericError& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return kExitRuntime;
  }
}

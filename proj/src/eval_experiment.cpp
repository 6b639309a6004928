#include <algorithm>
#include <memory>
#include <numeric>
#include <thread>

#include "mileaks/blackbox.hpp"
#include "mileaks/config_json.hpp"
#include "mileaks/eval.hpp"
#include "mileaks/jsonio.hpp"

namespace mileaks {

// ---------------------------------------------------------------------------
// Spec parsing

Dataset DatasetSource::build(const std::string& name) const {
  if (synthetic) {
    const Dataset data = generate(*synthetic);
    if (!feature_space_override) return data;
    return Dataset(data.points(), data.num_classes(),
                   {*feature_space_override, data.dimensionality()},
                   data.name());
  }
  if (!csv_path) throw ValidationError("dataset source needs csv or synthetic");
  LabelColumn column = label_column;
  if (!label_column_set)
    column = csv_arity(*csv_path, has_header) - 1;  // default: last column
  return load_csv(*csv_path, has_header, column, feature_space_override, name);
}

DatasetSource DatasetSource::from_json(const nlohmann::json& doc) {
  check_keys(doc,
             {"csv", "has_header", "label_column", "synthetic",
              "feature_space"},
             "dataset source");
  DatasetSource src;
  if (doc.contains("synthetic"))
    src.synthetic = SyntheticSpec::from_json(doc.at("synthetic"));
  if (doc.contains("csv")) src.csv_path = doc.at("csv").get<std::string>();
  if (src.synthetic && src.csv_path)
    throw ValidationError("dataset source: give either csv or synthetic");
  if (!src.synthetic && !src.csv_path)
    throw ValidationError("dataset source: needs csv or synthetic");
  src.has_header = doc.value("has_header", false);
  if (doc.contains("label_column")) {
    src.label_column_set = true;
    const auto& col = doc.at("label_column");
    if (col.is_number_unsigned() || col.is_number_integer())
      src.label_column = col.get<std::size_t>();
    else if (col.is_string())
      src.label_column = col.get<std::string>();
    else
      throw ValidationError("label_column must be an index or a name");
  }
  if (doc.contains("feature_space"))
    src.feature_space_override =
        feature_space_kind_from_string(doc.at("feature_space"));
  return src;
}

nlohmann::json DatasetSource::to_json() const {
  nlohmann::json doc = nlohmann::json::object();
  if (synthetic) doc["synthetic"] = synthetic->to_json();
  if (csv_path) {
    doc["csv"] = *csv_path;
    doc["has_header"] = has_header;
    if (label_column_set) {
      if (std::holds_alternative<std::size_t>(label_column))
        doc["label_column"] = std::get<std::size_t>(label_column);
      else
        doc["label_column"] = std::get<std::string>(label_column);
    }
  }
  if (feature_space_override)
    doc["feature_space"] = to_string(*feature_space_override);
  return doc;
}

DefenseSpec DefenseSpec::from_json(const nlohmann::json& doc) {
  check_keys(doc, {"kind", "input", "hidden", "base1", "base2", "meta"},
             "defense");
  DefenseSpec spec;
  const std::string kind = doc.value("kind", "none");
  if (kind == "none") {
    spec.kind = Kind::None;
  } else if (kind == "dropout") {
    spec.kind = Kind::Dropout;
    spec.dropout_input = doc.value("input", 0.5);
    spec.dropout_hidden = doc.value("hidden", 0.5);
    dropout_preset(spec.dropout_input, spec.dropout_hidden);  // validate
  } else if (kind == "stacking") {
    spec.kind = Kind::Stacking;
    for (const char* key : {"base1", "base2", "meta"})
      if (!doc.contains(key))
        throw ValidationError("stacking defense: missing field '" +
                              std::string(key) + "'");
    spec.base1 = train_config_from_json(doc.at("base1"));
    spec.base2 = train_config_from_json(doc.at("base2"));
    spec.meta = train_config_from_json(doc.at("meta"));
  } else {
    throw ValidationError("unknown defense kind: " + kind);
  }
  return spec;
}

nlohmann::json DefenseSpec::to_json() const {
  switch (kind) {
    case Kind::None:
      return nlohmann::json{{"kind", "none"}};
    case Kind::Dropout:
      return nlohmann::json{{"kind", "dropout"},
                            {"input", dropout_input},
                            {"hidden", dropout_hidden}};
    case Kind::Stacking:
      return nlohmann::json{{"kind", "stacking"},
                            {"base1", train_config_to_json(*base1)},
                            {"base2", train_config_to_json(*base2)},
                            {"meta", train_config_to_json(*meta)}};
  }
  return nlohmann::json{{"kind", "none"}};
}

AdversarySpec AdversarySpec::from_json(const nlohmann::json& doc) {
  check_keys(doc,
             {"kind", "shadow", "attack", "k_posteriors", "num_shadows",
              "sub_shadows", "shadow_dataset", "shadow_split_seed",
              "t_percent", "n_probes", "probe_seed", "statistic",
              "fixed_threshold"},
             "adversary");
  AdversarySpec spec;
  if (!doc.contains("kind"))
    throw ValidationError("adversary: missing field 'kind'");
  const std::string kind = doc.at("kind").get<std::string>();
  const auto need = [&](const char* key) {
    if (!doc.contains(key))
      throw ValidationError("adversary '" + kind + "': missing field '" +
                            std::string(key) + "'");
  };
  if (kind == "adversary1") {
    spec.kind = Kind::Adversary1;
    need("shadow");
    need("attack");
    spec.shadow = train_config_from_json(doc.at("shadow"));
    spec.attack = train_config_from_json(doc.at("attack"));
    spec.num_shadows = doc.value("num_shadows", 1);
    if (spec.num_shadows < 1)
      throw ValidationError("adversary: num_shadows must be positive");
  } else if (kind == "combining") {
    spec.kind = Kind::Combining;
    need("sub_shadows");
    need("attack");
    for (const auto& sub : doc.at("sub_shadows"))
      spec.sub_shadows.push_back(train_config_from_json(sub));
    if (spec.sub_shadows.empty())
      throw ValidationError("combining adversary needs sub_shadows");
    spec.attack = train_config_from_json(doc.at("attack"));
  } else if (kind == "adversary2") {
    spec.kind = Kind::Adversary2;
    need("shadow");
    need("attack");
    need("shadow_dataset");
    spec.shadow = train_config_from_json(doc.at("shadow"));
    spec.attack = train_config_from_json(doc.at("attack"));
    spec.shadow_dataset = DatasetSource::from_json(doc.at("shadow_dataset"));
    spec.shadow_split_seed = doc.value("shadow_split_seed", std::uint64_t{0});
  } else if (kind == "adversary3") {
    spec.kind = Kind::Adversary3;
    spec.t_percent = doc.value("t_percent", 10.0);
    spec.n_probes = doc.value("n_probes", std::size_t{1000});
    spec.probe_seed = doc.value("probe_seed", std::uint64_t{0});
    if (doc.contains("statistic"))
      spec.statistic = stat_kind_from_string(doc.at("statistic"));
    if (doc.contains("fixed_threshold"))
      spec.fixed_threshold = doc.at("fixed_threshold").get<double>();
  } else {
    throw ValidationError("adversary: unknown kind '" + kind + "'");
  }
  if (doc.contains("k_posteriors")) {
    spec.k_posteriors = doc.at("k_posteriors").get<std::size_t>();
    if (spec.k_posteriors < 1)
      throw ValidationError("k_posteriors must be at least 1");
  }
  return spec;
}

nlohmann::json AdversarySpec::to_json() const {
  nlohmann::json doc;
  switch (kind) {
    case Kind::Adversary1:
      doc["kind"] = "adversary1";
      doc["shadow"] = train_config_to_json(shadow);
      doc["attack"] = train_config_to_json(attack);
      if (num_shadows != 1) doc["num_shadows"] = num_shadows;
      break;
    case Kind::Combining: {
      doc["kind"] = "combining";
      nlohmann::json subs = nlohmann::json::array();
      for (const TrainConfig& cfg : sub_shadows)
        subs.push_back(train_config_to_json(cfg));
      doc["sub_shadows"] = std::move(subs);
      doc["attack"] = train_config_to_json(attack);
      break;
    }
    case Kind::Adversary2:
      doc["kind"] = "adversary2";
      doc["shadow"] = train_config_to_json(shadow);
      doc["attack"] = train_config_to_json(attack);
      doc["shadow_dataset"] = shadow_dataset->to_json();
      doc["shadow_split_seed"] = shadow_split_seed;
      break;
    case Kind::Adversary3:
      doc["kind"] = "adversary3";
      doc["t_percent"] = t_percent;
      doc["n_probes"] = n_probes;
      doc["probe_seed"] = probe_seed;
      doc["statistic"] = to_string(statistic);
      if (fixed_threshold) doc["fixed_threshold"] = *fixed_threshold;
      break;
  }
  if (k_posteriors != 0) doc["k_posteriors"] = k_posteriors;
  return doc;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& doc) {
  check_keys(doc,
             {"name", "dataset", "split_seed", "target", "defense",
              "adversary", "target_address", "output"},
             "experiment");
  for (const char* key : {"dataset", "split_seed", "target", "adversary"})
    if (!doc.contains(key))
      throw ValidationError("experiment: missing field '" + std::string(key) +
                            "'");
  ExperimentSpec spec;
  spec.name = doc.value("name", "");
  spec.dataset = DatasetSource::from_json(doc.at("dataset"));
  spec.split_seed = doc.at("split_seed").get<std::uint64_t>();
  spec.target = train_config_from_json(doc.at("target"));
  if (doc.contains("defense"))
    spec.defense = DefenseSpec::from_json(doc.at("defense"));
  spec.adversary = AdversarySpec::from_json(doc.at("adversary"));
  if (doc.contains("target_address"))
    spec.target_address = doc.at("target_address").get<std::string>();
  if (doc.contains("output")) spec.output = doc.at("output").get<std::string>();
  return spec;
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json doc{{"name", name},
                     {"dataset", dataset.to_json()},
                     {"split_seed", split_seed},
                     {"target", train_config_to_json(target)},
                     {"defense", defense.to_json()},
                     {"adversary", adversary.to_json()}};
  if (target_address) doc["target_address"] = *target_address;
  if (output) doc["output"] = *output;
  return doc;
}

void override_seeds(ExperimentSpec& spec, std::uint64_t seed) {
  // fixed per-field offsets keep the streams decorrelated
  spec.split_seed = seed;
  spec.target.seed = seed + 1;
  spec.adversary.shadow.seed = seed + 2;
  spec.adversary.attack.seed = seed + 3;
  spec.adversary.probe_seed = seed + 4;
  spec.adversary.shadow_split_seed = seed + 5;
  std::uint64_t at = seed + 6;
  for (TrainConfig& cfg : spec.adversary.sub_shadows) cfg.seed = at++;
  if (spec.dataset.synthetic) spec.dataset.synthetic->seed = at++;
  if (spec.adversary.shadow_dataset && spec.adversary.shadow_dataset->synthetic)
    spec.adversary.shadow_dataset->synthetic->seed = at++;
  if (spec.defense.base1) spec.defense.base1->seed = at++;
  if (spec.defense.base2) spec.defense.base2->seed = at++;
  if (spec.defense.meta) spec.defense.meta->seed = at++;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

std::vector<std::size_t> concat_parts(const SplitPlan& plan,
                                      std::initializer_list<const char*> names) {
  std::vector<std::size_t> out;
  for (const char* name : names) {
    const auto& part = plan.part(name);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

TrainConfig with_defense_dropout(TrainConfig cfg, const DefenseSpec& defense) {
  if (defense.kind == DefenseSpec::Kind::Dropout &&
      cfg.learner_kind == LearnerKind::Mlp)
    return apply_dropout(
        cfg, dropout_preset(defense.dropout_input, defense.dropout_hidden));
  return cfg;
}

struct World {
  Dataset data;
  SplitPlan plan;  // the attack's four-part view
  std::shared_ptr<const Predictor> target_model;
  // shadow side of the defended world (stacking defense only)
  std::shared_ptr<const Predictor> stacked_shadow;
  std::vector<std::size_t> shadow_members, shadow_nonmembers;
};

// Trains the (possibly defended) target and fixes the evaluation view:
// members are the points the target saw, non-members the held-out pool.
World build_world(const ExperimentSpec& spec) {
  Dataset data = spec.dataset.build(spec.name.empty() ? "dataset" : spec.name);

  if (spec.defense.kind == DefenseSpec::Kind::Stacking) {
    const SplitPlan stacking = plan_stacking_split(data, spec.split_seed);
    auto target = train_stacked(data, stacking.part("t1"), stacking.part("t2"),
                                stacking.part("t3"), *spec.defense.base1,
                                *spec.defense.base2, *spec.defense.meta,
                                spec.target.seed);
    target->set_part_names({"t1", "t2", "t3"});
    // attacker view: pooled train/test parts on each side
    std::map<std::string, std::vector<std::size_t>> parts;
    parts["target_train"] = concat_parts(stacking, {"t1", "t2", "t3"});
    parts["target_out"] = concat_parts(stacking, {"t4", "t5", "t6"});
    parts["shadow_train"] = concat_parts(stacking, {"s1", "s2", "s3"});
    parts["shadow_out"] = concat_parts(stacking, {"s4", "s5", "s6"});
    SplitPlan plan(std::move(parts), data.size());

    // the attacker knows the defense: her shadow is stacked the same way
    auto shadow = train_stacked(data, stacking.part("s1"), stacking.part("s2"),
                                stacking.part("s3"), *spec.defense.base1,
                                *spec.defense.base2, *spec.defense.meta,
                                spec.adversary.shadow.seed);
    shadow->set_part_names({"s1", "s2", "s3"});
    World world{std::move(data), std::move(plan), std::move(target),
                std::move(shadow), {}, {}};
    world.shadow_members = world.plan.part("shadow_train");
    world.shadow_nonmembers = world.plan.part("shadow_out");
    return world;
  }

  SplitPlan plan = plan_standard_split(data, spec.split_seed);
  const TrainConfig target_cfg = with_defense_dropout(spec.target, spec.defense);
  if (spec.defense.kind == DefenseSpec::Kind::Dropout &&
      spec.target.learner_kind != LearnerKind::Mlp)
    throw ValidationError("dropout defense needs an mlp target");
  std::shared_ptr<const Predictor> target =
      train(data, plan.part("target_train"), target_cfg);
  return World{std::move(data), std::move(plan), std::move(target), nullptr,
               {}, {}};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  World world = build_world(spec);
  const Dataset& data = world.data;
  const SplitPlan& plan = world.plan;

  std::unique_ptr<BlackBox> box;
  if (spec.target_address) {
    const auto [host, port] = parse_address(*spec.target_address);
    box = std::make_unique<HttpBlackBox>(host, port, data.dimensionality(),
                                         data.num_classes());
  } else {
    box = std::make_unique<ModelBlackBox>(world.target_model);
  }

  const std::uint64_t queries_before = box->query_count();
  AttackDecisions outcome;
  nlohmann::json extra = nlohmann::json::object();

  switch (spec.adversary.kind) {
    case AdversarySpec::Kind::Adversary1: {
      if (world.stacked_shadow) {
        if (spec.adversary.num_shadows != 1)
          throw ValidationError(
              "pooled shadows are not defined for the stacking defense");
        // defended world: the shadow is the stacked model built above
        const std::size_t k = spec.adversary.k_posteriors != 0
                                  ? spec.adversary.k_posteriors
                                  : default_k(data.num_classes());
        const auto rows =
            attack_rows(*world.stacked_shadow, data, world.shadow_members,
                        world.shadow_nonmembers, k);
        const auto attack_model =
            train_attack_model(rows, spec.adversary.attack);
        outcome = infer_membership(*attack_model, *box, data,
                                   plan.part("target_train"),
                                   plan.part("target_out"), k);
      } else {
        const TrainConfig shadow_cfg =
            with_defense_dropout(spec.adversary.shadow, spec.defense);
        outcome = spec.adversary.num_shadows == 1
                      ? adversary1(shadow_cfg, spec.adversary.attack, data,
                                   plan, *box, spec.adversary.k_posteriors)
                      : adversary1_pooled(shadow_cfg, spec.adversary.attack,
                                          data, plan, *box,
                                          spec.adversary.k_posteriors,
                                          spec.adversary.num_shadows);
      }
      break;
    }
    case AdversarySpec::Kind::Combining: {
      if (spec.defense.kind == DefenseSpec::Kind::Stacking)
        throw ValidationError(
            "combining attack is not defined for the stacking defense");
      std::vector<TrainConfig> subs;
      subs.reserve(spec.adversary.sub_shadows.size());
      for (const TrainConfig& cfg : spec.adversary.sub_shadows)
        subs.push_back(with_defense_dropout(cfg, spec.defense));
      outcome = combining_attack(subs, spec.adversary.attack, data, plan, *box,
                                 spec.adversary.k_posteriors);
      break;
    }
    case AdversarySpec::Kind::Adversary2: {
      if (spec.defense.kind == DefenseSpec::Kind::Stacking)
        throw ValidationError(
            "adversary2 with a stacking defense is not supported");
      const Dataset shadow_data =
          spec.adversary.shadow_dataset->build("shadow_dataset");
      const SplitPlan shadow_plan =
          plan_standard_split(shadow_data, spec.adversary.shadow_split_seed);
      const TrainConfig shadow_cfg =
          with_defense_dropout(spec.adversary.shadow, spec.defense);
      outcome = adversary2(shadow_data, shadow_plan, shadow_cfg,
                           spec.adversary.attack, data, plan, *box);
      extra["shadow_split_plan"] = split_plan_to_json(shadow_plan);
      break;
    }
    case AdversarySpec::Kind::Adversary3: {
      ThresholdRule rule;
      if (spec.adversary.fixed_threshold) {
        rule = ThresholdRule{spec.adversary.statistic,
                             *spec.adversary.fixed_threshold,
                             default_direction(spec.adversary.statistic)};
      } else {
        const auto probes =
            generate_probes(data.feature_space(), spec.adversary.n_probes,
                            spec.adversary.probe_seed);
        rule = choose_threshold(*box, probes, spec.adversary.t_percent);
      }
      outcome = adversary3_on_plan(*box, rule, data, plan.part("target_train"),
                                   plan.part("target_out"));
      extra["threshold_rule"] = nlohmann::json{
          {"statistic", to_string(rule.statistic)},
          {"threshold", rule.threshold},
          {"direction",
           rule.direction == ThresholdRule::Direction::AboveMeansMember
               ? "above_means_member"
               : "below_means_member"}};
      break;
    }
  }

  AttackReport report;
  const PrecisionRecall pr = precision_recall(outcome.decisions, outcome.truth);
  report.precision = pr.precision;
  report.recall = pr.recall;
  report.precision_defined = pr.precision_defined;
  report.recall_defined = pr.recall_defined;
  bool both_classes = false, saw_member = false, saw_non = false;
  for (MembershipLabel label : outcome.truth) {
    if (label == MembershipLabel::Member) saw_member = true;
    if (label == MembershipLabel::NonMember) saw_non = true;
  }
  both_classes = saw_member && saw_non;
  if (both_classes) report.auc = auc(outcome.scores, outcome.truth);

  // the experimenter owns the target, so diagnostics bypass the black box
  report.target_train_accuracy =
      accuracy(*world.target_model, data, plan.part("target_train"));
  report.target_test_accuracy =
      accuracy(*world.target_model, data, plan.part("target_out"));
  report.overfitting_level =
      report.target_train_accuracy - report.target_test_accuracy;
  report.query_cost = box->query_count() - queries_before;

  nlohmann::json manifest{{"experiment", spec.to_json()},
                          {"split_plan", split_plan_to_json(plan)},
                          {"report", report.to_json()}};
  for (auto it = extra.begin(); it != extra.end(); ++it)
    manifest[it.key()] = it.value();
  std::vector<int> decisions, truth;
  for (MembershipLabel d : outcome.decisions)
    decisions.push_back(static_cast<int>(d));
  for (MembershipLabel t : outcome.truth) truth.push_back(static_cast<int>(t));
  manifest["decisions"] = decisions;
  manifest["truth"] = truth;
  manifest["scores"] = outcome.scores;

  return ExperimentResult{std::move(report), std::move(manifest)};
}

// ---------------------------------------------------------------------------
// Sweeps

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "epochs") return SweepAxis::Epochs;
  if (s == "num_shadow_models") return SweepAxis::NumShadowModels;
  if (s == "k_posteriors") return SweepAxis::KPosteriors;
  if (s == "dropout_grid") return SweepAxis::DropoutGrid;
  if (s == "t_percentile") return SweepAxis::TPercentile;
  throw ValidationError("unknown sweep axis: " + s);
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Epochs:
      return "epochs";
    case SweepAxis::NumShadowModels:
      return "num_shadow_models";
    case SweepAxis::KPosteriors:
      return "k_posteriors";
    case SweepAxis::DropoutGrid:
      return "dropout_grid";
    case SweepAxis::TPercentile:
      return "t_percentile";
  }
  return "epochs";
}

namespace {

ExperimentSpec apply_axis(const ExperimentSpec& base, SweepAxis axis,
                          const nlohmann::json& value) {
  ExperimentSpec spec = base;
  switch (axis) {
    case SweepAxis::Epochs: {
      const int epochs = value.get<int>();
      // the shadow mirrors the target's training depth
      spec.target.epochs = epochs;
      spec.adversary.shadow.epochs = epochs;
      for (TrainConfig& cfg : spec.adversary.sub_shadows) cfg.epochs = epochs;
      break;
    }
    case SweepAxis::NumShadowModels: {
      if (spec.adversary.kind != AdversarySpec::Kind::Adversary1)
        throw ValidationError(
            "num_shadow_models axis applies to adversary1 only");
      spec.adversary.num_shadows = value.get<int>();
      break;
    }
    case SweepAxis::KPosteriors: {
      if (spec.adversary.kind == AdversarySpec::Kind::Adversary3)
        throw ValidationError(
            "k_posteriors axis applies to supervised adversaries");
      spec.adversary.k_posteriors = value.get<std::size_t>();
      break;
    }
    case SweepAxis::DropoutGrid: {
      if (!value.is_array() || value.size() != 2)
        throw ValidationError(
            "dropout_grid values are [input, hidden] ratio pairs");
      spec.defense.kind = DefenseSpec::Kind::Dropout;
      spec.defense.dropout_input = value[0].get<double>();
      spec.defense.dropout_hidden = value[1].get<double>();
      dropout_preset(spec.defense.dropout_input, spec.defense.dropout_hidden);
      break;
    }
    case SweepAxis::TPercentile: {
      if (spec.adversary.kind != AdversarySpec::Kind::Adversary3)
        throw ValidationError("t_percentile axis applies to adversary3 only");
      spec.adversary.t_percent = value.get<double>();
      break;
    }
  }
  return spec;
}

}  // namespace

std::vector<ExperimentResult> sweep(const ExperimentSpec& spec, SweepAxis axis,
                                    const std::vector<nlohmann::json>& values,
                                    int jobs) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  if (jobs < 1) throw ValidationError("jobs must be positive");

  std::vector<ExperimentResult> results(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  const auto run_point = [&](std::size_t i) {
    try {
      const ExperimentSpec point = apply_axis(spec, axis, values[i]);
      results[i] = run_experiment(point);
      results[i].report.axis_name = to_string(axis);
      results[i].report.axis_value = values[i];
      results[i].manifest["axis"] =
          nlohmann::json{{"name", to_string(axis)}, {"value", values[i]}};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (jobs == 1) {
    for (std::size_t i = 0; i < values.size(); ++i) run_point(i);
  } else {
    std::vector<std::thread> pool;
    const std::size_t stride = static_cast<std::size_t>(jobs);
    for (std::size_t t = 0; t < stride; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < values.size(); i += stride) run_point(i);
      });
    for (std::thread& th : pool) th.join();
  }
  for (const auto& error : errors)
    if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace mileaks

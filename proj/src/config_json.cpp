#include "mileaks/config_json.hpp"

#include "mileaks/jsonio.hpp"

namespace mileaks {

TrainConfig train_config_from_json(const nlohmann::json& doc) {
  check_keys(doc,
             {"learner_kind", "epochs", "batch_size", "learning_rate",
              "l2_lambda", "hidden_units", "dropout_input", "dropout_hidden",
              "trees", "max_depth", "seed"},
             "train config");
  if (!doc.contains("learner_kind"))
    throw ValidationError("train config: missing field 'learner_kind'");
  if (!doc.contains("seed"))
    throw ValidationError("train config: missing field 'seed'");
  TrainConfig defaults;
  TrainConfig config;
  config.learner_kind =
      learner_kind_from_string(doc.at("learner_kind").get<std::string>());
  config.epochs = doc.value("epochs", defaults.epochs);
  config.batch_size = doc.value("batch_size", defaults.batch_size);
  config.learning_rate = doc.value("learning_rate", defaults.learning_rate);
  config.l2_lambda = doc.value("l2_lambda", defaults.l2_lambda);
  config.hidden_units = doc.value("hidden_units", defaults.hidden_units);
  config.dropout_input = doc.value("dropout_input", defaults.dropout_input);
  config.dropout_hidden = doc.value("dropout_hidden", defaults.dropout_hidden);
  config.trees = doc.value("trees", defaults.trees);
  config.max_depth = doc.value("max_depth", defaults.max_depth);
  config.seed = doc.at("seed").get<std::uint64_t>();
  config.validate();
  return config;
}

nlohmann::json train_config_to_json(const TrainConfig& config) {
  return nlohmann::json{{"learner_kind", to_string(config.learner_kind)},
                        {"epochs", config.epochs},
                        {"batch_size", config.batch_size},
                        {"learning_rate", config.learning_rate},
                        {"l2_lambda", config.l2_lambda},
                        {"hidden_units", config.hidden_units},
                        {"dropout_input", config.dropout_input},
                        {"dropout_hidden", config.dropout_hidden},
                        {"trees", config.trees},
                        {"max_depth", config.max_depth},
                        {"seed", config.seed}};
}

}  // namespace mileaks

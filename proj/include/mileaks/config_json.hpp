#pragma once

#include "json.hpp"
#include "mileaks/core.hpp"

namespace mileaks {

// learner_kind and seed are required; everything else falls back to the
// TrainConfig defaults. Unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& doc);
nlohmann::json train_config_to_json(const TrainConfig& config);

}  // namespace mileaks

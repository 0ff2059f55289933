#pragma once

#include <json.hpp>

#include "ne3/mdp.hpp"

namespace ne3 {

/// Layout documented in docs/schemas/tabular_mdp.schema.json:
/// {"num_states", "num_actions", "horizon", "transitions": [s][a][s'],
///  "rewards": [s], "initial": state index or [s] distribution}.
nlohmann::json to_json(const TabularMDP& mdp);
TabularMDP tabular_mdp_from_json(const nlohmann::json& doc);

}  // namespace ne3

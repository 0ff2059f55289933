#include "ne3/mdp_json.hpp"

#include "ne3/errors.hpp"

namespace ne3 {

using nlohmann::json;

json to_json(const TabularMDP& mdp) {
  json transitions = json::array();
  for (int s = 0; s < mdp.num_states(); ++s) {
    json per_action = json::array();
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.row(s, a);
      per_action.push_back(std::vector<double>(row.begin(), row.end()));
    }
    transitions.push_back(std::move(per_action));
  }
  return json{{"num_states", mdp.num_states()},
              {"num_actions", mdp.num_actions()},
              {"horizon", mdp.horizon()},
              {"transitions", std::move(transitions)},
              {"rewards", std::vector<double>(mdp.rewards().begin(), mdp.rewards().end())},
              {"initial", std::vector<double>(mdp.initial().begin(), mdp.initial().end())}};
}

TabularMDP tabular_mdp_from_json(const json& doc) {
  try {
    const int S = doc.at("num_states").get<int>();
    const int A = doc.at("num_actions").get<int>();
    const int H = doc.at("horizon").get<int>();
    const auto& nested = doc.at("transitions");
    if (!nested.is_array() || nested.size() != static_cast<std::size_t>(S)) {
      throw ConfigError("transitions must have num_states entries");
    }
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(S) * static_cast<std::size_t>(A) * static_cast<std::size_t>(S));
    for (const auto& per_action : nested) {
      if (!per_action.is_array() || per_action.size() != static_cast<std::size_t>(A)) {
        throw ConfigError("each transitions[s] must have num_actions rows");
      }
      for (const auto& row : per_action) {
        if (!row.is_array() || row.size() != static_cast<std::size_t>(S)) {
          throw ConfigError("each transition row must have num_states entries");
        }
        for (const auto& p : row) flat.push_back(p.get<double>());
      }
    }
    auto rewards = doc.at("rewards").get<std::vector<double>>();
    const auto& init = doc.at("initial");
    if (init.is_number_integer()) {
      return TabularMDP(S, A, H, std::move(flat), std::move(rewards), init.get<int>());
    }
    return TabularMDP(S, A, H, std::move(flat), std::move(rewards), init.get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed tabular MDP document: ") + e.what());
  }
}

}  // namespace ne3

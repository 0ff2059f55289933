#include "ne3/planners.hpp"

namespace ne3::planners {

ReplannedEpisode execute_with_replanning(env::Environment& environment, const PlanFn& planner, bool first_action_only,
                                         Rng& rng) {
  ReplannedEpisode out;
  env::Observation obs = environment.reset(rng);
  std::vector<int> plan;
  std::size_t next = 0;
  while (!environment.done()) {
    if (next >= plan.size()) {
      plan = planner(obs, environment.steps_elapsed());
      ++out.planner_calls;
      next = 0;
      if (plan.empty()) plan.push_back(rng.uniform_index(static_cast<std::size_t>(environment.num_actions())));
      if (first_action_only) plan.resize(1);
    }
    const int a = plan[next++];
    const int h = environment.steps_elapsed();
    auto r = environment.step(a, rng);
    out.trajectory.steps.push_back(env::EnvStep{h + 1, obs, a, r.reward, r.observation, r.done});
    obs = std::move(r.observation);
  }
  return out;
}

}  // namespace ne3::planners

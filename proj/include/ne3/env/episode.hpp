#pragma once

#include <functional>
#include <vector>

#include "ne3/env/environment.hpp"
#include "ne3/replay_buffer.hpp"

namespace ne3::env {

/// One environment transition; h counts from 1 within the episode.
struct EnvStep {
  int h = 0;
  Observation observation;
  int action = 0;
  double reward = 0.0;
  Observation next_observation;
  bool done = false;
};
using EnvTrajectory = Trajectory<EnvStep>;

inline double episode_return(const EnvTrajectory& t) {
  double r = 0.0;
  for (const auto& s : t.steps) r += s.reward;
  return r;
}

/// Plays one episode choosing actions with `policy(observation, steps_so_far)`.
inline EnvTrajectory run_episode(Environment& env, const std::function<int(const Observation&, int)>& policy,
                                 Rng& rng) {
  EnvTrajectory t;
  Observation obs = env.reset(rng);
  while (!env.done()) {
    const int h = env.steps_elapsed();
    const int a = policy(obs, h);
    auto r = env.step(a, rng);
    t.steps.push_back(EnvStep{h + 1, obs, a, r.reward, r.observation, r.done});
    obs = std::move(r.observation);
  }
  return t;
}

}  // namespace ne3::env

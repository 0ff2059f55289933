#pragma once

#include <cstddef>
#include <vector>

#include "ne3/rng.hpp"

namespace ne3::env {

using Observation = std::vector<double>;

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

/// Episodic environment with vector observations and a discrete action set.
/// Instances are single-threaded; run one per worker.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int num_actions() const = 0;
  /// Maximum number of steps in an episode.
  virtual int horizon() const = 0;
  virtual std::size_t observation_size() const = 0;
  virtual Observation reset(Rng& rng) = 0;
  /// Throws EpisodeOverError once the episode has ended.
  virtual StepResult step(int action, Rng& rng) = 0;
  virtual bool done() const = 0;
  virtual int steps_elapsed() const = 0;
};

}  // namespace ne3::env

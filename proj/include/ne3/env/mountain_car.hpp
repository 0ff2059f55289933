#pragma once

#include "ne3/env/environment.hpp"
#include "ne3/models.hpp"

namespace ne3::env {

inline constexpr double kCarMinPosition = -1.2;
inline constexpr double kCarMaxPosition = 0.6;
inline constexpr double kCarMaxSpeed = 0.07;
inline constexpr double kCarGoalPosition = 0.5;
inline constexpr double kCarForce = 0.001;
inline constexpr double kCarGravity = 0.0025;

struct MountainCarState {
  double position = -0.5;
  double velocity = 0.0;
};

struct MountainCarStep {
  MountainCarState state;
  double reward = 0.0;
  bool terminal = false;
};

/// Classic dynamics with the sparse reward: 1 on reaching the goal, else 0.
/// Actions: 0 push left, 1 no push, 2 push right.
MountainCarStep mountaincar_step(const MountainCarState& state, int action);

struct MountainCarConfig {
  int time_limit = 200;
};

class MountainCar : public Environment {
 public:
  explicit MountainCar(MountainCarConfig config = {}) : config_(config) {}

  int num_actions() const override { return 3; }
  int horizon() const override { return config_.time_limit; }
  std::size_t observation_size() const override { return 2; }
  /// Position uniform in [-0.6, -0.4], at rest.
  Observation reset(Rng& rng) override;
  StepResult step(int action, Rng& rng) override;
  bool done() const override { return done_; }
  int steps_elapsed() const override { return steps_; }

  const MountainCarState& state() const noexcept { return state_; }

 private:
  MountainCarConfig config_;
  MountainCarState state_;
  int steps_ = 0;
  bool done_ = false;
};

class MountainCarTrueModel : public DeterministicModel {
 public:
  std::size_t state_size() const override { return 2; }
  int num_actions() const override { return 3; }
  Prediction predict(std::span<const double> state, int action) const override;
};

}  // namespace ne3::env

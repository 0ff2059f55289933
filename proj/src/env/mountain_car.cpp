#include "ne3/env/mountain_car.hpp"

#include <algorithm>
#include <cmath>

#include "ne3/errors.hpp"

namespace ne3::env {

MountainCarStep mountaincar_step(const MountainCarState& state, int action) {
  if (action < 0 || action > 2) throw IndexError("mountain car action out of range");
  MountainCarStep out;
  double v = state.velocity + kCarForce * (action - 1) - kCarGravity * std::cos(3.0 * state.position);
  v = std::clamp(v, -kCarMaxSpeed, kCarMaxSpeed);
  double x = std::clamp(state.position + v, kCarMinPosition, kCarMaxPosition);
  if (x == kCarMinPosition && v < 0.0) v = 0.0;
  out.state = {x, v};
  out.terminal = x >= kCarGoalPosition;
  out.reward = out.terminal ? 1.0 : 0.0;
  return out;
}

Observation MountainCar::reset(Rng& rng) {
  state_ = {rng.uniform(-0.6, -0.4), 0.0};
  steps_ = 0;
  done_ = false;
  return {state_.position, state_.velocity};
}

StepResult MountainCar::step(int action, Rng&) {
  if (done_) throw EpisodeOverError("mountain car episode is over");
  const auto r = mountaincar_step(state_, action);
  state_ = r.state;
  ++steps_;
  done_ = r.terminal || steps_ >= config_.time_limit;
  return StepResult{{state_.position, state_.velocity}, r.reward, done_};
}

Prediction MountainCarTrueModel::predict(std::span<const double> state, int action) const {
  if (state.size() != 2) throw IndexError("mountain car state has the wrong length");
  if (state[0] >= kCarGoalPosition) return Prediction{State(state.begin(), state.end()), 0.0};
  const auto r = mountaincar_step({state[0], state[1]}, action);
  return Prediction{{r.state.position, r.state.velocity}, r.reward};
}

}  // namespace ne3::env

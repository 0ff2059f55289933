#include "ne3/env/combolock.hpp"

#include <string>

#include "ne3/errors.hpp"

namespace ne3::env {

void CombolockConfig::validate() const {
  if (horizon < 2) throw ConfigError("combination lock horizon must be at least 2");
  if (!(flip_prob >= 0.0 && flip_prob < 0.5)) throw ConfigError("flip_prob must lie in [0, 0.5)");
}

CombolockLayout combolock_layout(const CombolockConfig& config) {
  config.validate();
  Rng rng(config.env_seed);
  CombolockLayout layout;
  layout.next.resize(static_cast<std::size_t>(config.horizon - 1));
  for (auto& level : layout.next) {
    for (auto& row : level) {
      row = {Latent::Good1, Latent::Good2, Latent::Dead, Latent::Dead};
      rng.shuffle(row.begin(), row.end());
    }
  }
  for (auto& a : layout.designated) a = rng.uniform_index(kCombolockActions);
  return layout;
}

Combolock::Combolock(CombolockConfig config) : Combolock(config, combolock_layout(config)) {}

Combolock::Combolock(CombolockConfig config, CombolockLayout layout)
    : config_(config), layout_(std::move(layout)) {
  config_.validate();
  if (layout_.next.size() != static_cast<std::size_t>(config_.horizon - 1)) {
    throw ConfigError("combination lock layout does not match the horizon");
  }
  state_.level = config_.horizon;  // nothing to step until reset()
}

std::size_t Combolock::observation_size() const {
  return static_cast<std::size_t>(3 * config_.horizon + config_.effective_noise_bits());
}

CombolockState Combolock::initial_state(Rng& rng) const {
  CombolockState s;
  s.level = 0;
  s.latent = config_.initial == InitialLatent::Random && rng.bernoulli(0.5) ? Latent::Good2 : Latent::Good1;
  return s;
}

CombolockTransition Combolock::transition(const CombolockState& state, int action, Rng& rng) const {
  const int H = config_.horizon;
  if (state.level >= H) throw EpisodeOverError("combination lock episode is over");
  if (action < 0 || action >= kCombolockActions) throw IndexError("combination lock action out of range");

  CombolockTransition out;
  out.next.level = state.level + 1;

  if (state.level == H - 1) {
    // Final level: every action ends the episode.
    out.next.latent = state.latent;
    if (state.latent != Latent::Dead &&
        action == layout_.designated[static_cast<std::size_t>(state.latent)]) {
      out.reward = kCombolockGoalReward;
    }
    return out;
  }

  if (state.latent == Latent::Dead) {
    out.next.latent = Latent::Dead;
    return out;
  }

  Latent dest = layout_.next[static_cast<std::size_t>(state.level)][static_cast<std::size_t>(state.latent)]
                            [static_cast<std::size_t>(action)];
  if (dest != Latent::Dead && rng.bernoulli(config_.flip_prob)) {
    dest = dest == Latent::Good1 ? Latent::Good2 : Latent::Good1;
  }
  out.next.latent = dest;
  if (config_.antishaped) {
    out.reward = dest == Latent::Dead ? kCombolockDeadReward : -1.0 / H;
  }
  return out;
}

Observation Combolock::observe(const CombolockState& state, Rng& rng) const {
  Observation obs(observation_size(), 0.0);
  if (state.level < config_.horizon) {
    obs[static_cast<std::size_t>(3 * state.level + static_cast<int>(state.latent))] = 1.0;
  }
  for (std::size_t i = static_cast<std::size_t>(3 * config_.horizon); i < obs.size(); ++i) {
    obs[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  return obs;
}

CombolockState Combolock::decode(std::span<const double> observation) const {
  const int block = 3 * config_.horizon;
  for (int i = 0; i < block; ++i) {
    if (observation[static_cast<std::size_t>(i)] > 0.5) {
      return CombolockState{i / 3, static_cast<Latent>(i % 3)};
    }
  }
  return CombolockState{config_.horizon, Latent::Dead};
}

Observation Combolock::reset(Rng& rng) {
  state_ = initial_state(rng);
  return observe(state_, rng);
}

StepResult Combolock::step(int action, Rng& rng) {
  const auto t = transition(state_, action, rng);
  state_ = t.next;
  return StepResult{observe(state_, rng), t.reward, done()};
}

int combolock_state_index(const CombolockConfig& config, const CombolockState& state) {
  if (state.level >= config.horizon) throw IndexError("terminal lock states have no latent index");
  return 3 * state.level + static_cast<int>(state.latent);
}

TabularMDP true_tabular_model(const CombolockConfig& config) {
  return true_tabular_model(config, combolock_layout(config));
}

TabularMDP true_tabular_model(const CombolockConfig& config, const CombolockLayout& layout) {
  config.validate();
  if (config.antishaped) {
    throw ConfigError("the antishaped lock has transition-based negative rewards; no tabular model");
  }
  const int H = config.horizon;
  const int S = 3 * H + 2;
  const int goal = 3 * H;
  const int end = 3 * H + 1;
  const auto A = static_cast<std::size_t>(kCombolockActions);
  std::vector<double> P(static_cast<std::size_t>(S) * A * static_cast<std::size_t>(S), 0.0);
  auto at = [&](int s, int a, int n) -> double& {
    return P[(static_cast<std::size_t>(s) * A + static_cast<std::size_t>(a)) * static_cast<std::size_t>(S) +
             static_cast<std::size_t>(n)];
  };
  const double f = config.flip_prob;
  for (int level = 0; level < H; ++level) {
    for (int latent = 0; latent < 3; ++latent) {
      const int s = 3 * level + latent;
      for (int a = 0; a < kCombolockActions; ++a) {
        if (level == H - 1) {
          const bool paid = latent != static_cast<int>(Latent::Dead) &&
                            a == layout.designated[static_cast<std::size_t>(latent)];
          at(s, a, paid ? goal : end) = 1.0;
        } else if (latent == static_cast<int>(Latent::Dead)) {
          at(s, a, 3 * (level + 1) + 2) = 1.0;
        } else {
          const Latent dest = layout.next[static_cast<std::size_t>(level)][static_cast<std::size_t>(latent)]
                                         [static_cast<std::size_t>(a)];
          const int base = 3 * (level + 1);
          if (dest == Latent::Dead) {
            at(s, a, base + 2) = 1.0;
          } else {
            const int d = static_cast<int>(dest);
            at(s, a, base + d) += 1.0 - f;
            at(s, a, base + (1 - d)) += f;
          }
        }
      }
    }
  }
  for (int a = 0; a < kCombolockActions; ++a) {
    at(goal, a, goal) = 1.0;
    at(end, a, end) = 1.0;
  }
  std::vector<double> R(static_cast<std::size_t>(S), 0.0);
  R[static_cast<std::size_t>(goal)] = 1.0;
  std::vector<double> init(static_cast<std::size_t>(S), 0.0);
  if (config.initial == InitialLatent::Random) {
    init[0] = 0.5;
    init[1] = 0.5;
  } else {
    init[0] = 1.0;
  }
  return TabularMDP(S, kCombolockActions, H, std::move(P), std::move(R), std::move(init));
}

void CombolockTrueModel::sample_batch(StateBatch& states, int action, std::span<double> rewards,
                                      Rng& rng) const {
  for (std::size_t r = 0; r < states.rows(); ++r) {
    auto row = states.row(r);
    const CombolockState s = lock_.decode(row);
    if (s.level >= lock_.config().horizon) {
      rewards[r] = 0.0;  // absorbing after the episode ends
      continue;
    }
    const auto t = lock_.transition(s, action, rng);
    const auto obs = lock_.observe(t.next, rng);
    std::copy(obs.begin(), obs.end(), row.begin());
    rewards[r] = t.reward;
  }
}

}  // namespace ne3::env

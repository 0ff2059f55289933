#pragma once

// Stochastic combination lock: H levels of {good1, good2, dead}, 4 actions.
//
// At every non-final level each good state sends two actions to the next
// dead state and one action to each of the next level's good states; the
// dead state is absorbing. With probability flip_prob the two good-leading
// actions swap destinations. At the final level one designated action per
// good state pays the terminal reward and every action ends the episode.

#include <array>
#include <cstdint>
#include <vector>

#include "ne3/env/environment.hpp"
#include "ne3/mdp.hpp"
#include "ne3/models.hpp"

namespace ne3::env {

enum class Latent : int { Good1 = 0, Good2 = 1, Dead = 2 };

enum class InitialLatent { Good1, Random };

struct CombolockConfig {
  int horizon = 5;
  double flip_prob = 0.1;
  /// Appended Bernoulli(0.5) observation bits; negative means `horizon`.
  int noise_bits = -1;
  bool antishaped = false;
  std::uint64_t env_seed = 0;
  InitialLatent initial = InitialLatent::Good1;

  int effective_noise_bits() const noexcept { return noise_bits < 0 ? horizon : noise_bits; }
  void validate() const;
};

inline constexpr int kCombolockActions = 4;
inline constexpr double kCombolockGoalReward = 5.0;
inline constexpr double kCombolockDeadReward = 0.1;

/// Fixed action wiring drawn from env_seed.
struct CombolockLayout {
  /// next[level][good][action] in {Good1, Good2, Dead} for level < H-1.
  std::vector<std::array<std::array<Latent, kCombolockActions>, 2>> next;
  /// Rewarded action at the final level for each good state.
  std::array<int, 2> designated{0, 0};

  bool operator==(const CombolockLayout&) const = default;
};

CombolockLayout combolock_layout(const CombolockConfig& config);

struct CombolockState {
  int level = 0;  // level == horizon means the episode is over
  Latent latent = Latent::Good1;
};

struct CombolockTransition {
  CombolockState next;
  double reward = 0.0;
};

class Combolock : public Environment {
 public:
  explicit Combolock(CombolockConfig config);
  Combolock(CombolockConfig config, CombolockLayout layout);

  const CombolockConfig& config() const noexcept { return config_; }
  const CombolockLayout& layout() const noexcept { return layout_; }

  /// One transition from `state`; throws EpisodeOverError at the final level + 1.
  CombolockTransition transition(const CombolockState& state, int action, Rng& rng) const;

  /// One-hot (level, latent) block of length 3H, then noise bits. The block is
  /// all zero once the episode is over.
  Observation observe(const CombolockState& state, Rng& rng) const;

  CombolockState initial_state(Rng& rng) const;

  /// Decodes the one-hot block of an observation.
  CombolockState decode(std::span<const double> observation) const;

  const CombolockState& state() const noexcept { return state_; }

  int num_actions() const override { return kCombolockActions; }
  int horizon() const override { return config_.horizon; }
  std::size_t observation_size() const override;
  Observation reset(Rng& rng) override;
  StepResult step(int action, Rng& rng) override;
  bool done() const override { return state_.level >= config_.horizon; }
  int steps_elapsed() const override { return state_.level; }

 private:
  CombolockConfig config_;
  CombolockLayout layout_;
  CombolockState state_;
};

/// Exact latent-state model of the standard-reward lock.
///
/// States: index 3*level + latent for level < H, then `goal` (3H) and `end`
/// (3H+1), both absorbing. Rewards are divided by the goal reward so they lie
/// in [0, 1]; multiply values by kCombolockGoalReward to compare with
/// environment returns. Throws ConfigError for the antishaped variant, whose
/// rewards are transition-based and negative.
TabularMDP true_tabular_model(const CombolockConfig& config);
TabularMDP true_tabular_model(const CombolockConfig& config, const CombolockLayout& layout);

int combolock_state_index(const CombolockConfig& config, const CombolockState& state);

/// Perfect generative model over observations, for planning with the truth.
class CombolockTrueModel : public StochasticModel {
 public:
  explicit CombolockTrueModel(const Combolock& lock) : lock_(lock) {}
  std::size_t state_size() const override { return lock_.observation_size(); }
  int num_actions() const override { return kCombolockActions; }
  void sample_batch(StateBatch& states, int action, std::span<double> rewards, Rng& rng) const override;

 private:
  Combolock lock_;
};

}  // namespace ne3::env

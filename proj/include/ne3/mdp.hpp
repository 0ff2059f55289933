#pragma once

// Finite-horizon tabular MDPs: the environment truth for desk-scale
// experiments and the candidate models inside a model class.
//
// Step convention: states are s_0 .. s_H. Step h (1-based) takes action a_h in
// state s_{h-1} and lands in s_h, collecting R(s_h). state_distribution(h)
// is the law of s_h, so h = 0 is the initial distribution.

#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "ne3/replay_buffer.hpp"
#include "ne3/rng.hpp"

namespace ne3 {

class TabularMDP {
 public:
  /// `transitions` is row-major [s][a][s'], `initial` a distribution over states.
  TabularMDP(int num_states, int num_actions, int horizon, std::vector<double> transitions,
             std::vector<double> rewards, std::vector<double> initial);

  /// Convenience: deterministic start in `initial_state`.
  TabularMDP(int num_states, int num_actions, int horizon, std::vector<double> transitions,
             std::vector<double> rewards, int initial_state);

  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }
  int horizon() const noexcept { return horizon_; }

  double p(int s, int a, int next) const {
    return transitions_[index(s, a) + static_cast<std::size_t>(next)];
  }
  std::span<const double> row(int s, int a) const {
    return {transitions_.data() + index(s, a), static_cast<std::size_t>(num_states_)};
  }
  double reward(int s) const { return rewards_[static_cast<std::size_t>(s)]; }
  std::span<const double> rewards() const noexcept { return rewards_; }
  std::span<const double> initial() const noexcept { return initial_; }
  std::span<const double> transitions() const noexcept { return transitions_; }

  bool same_shape(const TabularMDP& other) const noexcept {
    return num_states_ == other.num_states_ && num_actions_ == other.num_actions_ &&
           horizon_ == other.horizon_;
  }

  /// Copy with a different transition tensor (same shape, rewards, start).
  TabularMDP with_transitions(std::vector<double> transitions) const;

  void check_state(int s) const;
  void check_action(int a) const;

 private:
  std::size_t index(int s, int a) const noexcept {
    return (static_cast<std::size_t>(s) * static_cast<std::size_t>(num_actions_) +
            static_cast<std::size_t>(a)) *
           static_cast<std::size_t>(num_states_);
  }
  void validate() const;

  int num_states_;
  int num_actions_;
  int horizon_;
  std::vector<double> transitions_;
  std::vector<double> rewards_;
  std::vector<double> initial_;
};

/// Tabular action-value function queried by Greedy policies.
class QFunction {
 public:
  virtual ~QFunction() = default;
  virtual int num_actions() const = 0;
  /// Value of taking `action` at step h (1-based) in state s.
  virtual double q(int h, int s, int action) const = 0;
};

/// Deterministic policy over a tabular MDP.
class Policy {
 public:
  /// table[h-1][s] is the action at step h in state s.
  struct TabularDet {
    std::vector<std::vector<int>> table;
  };
  struct OpenLoop {
    std::vector<int> actions;
  };
  struct Greedy {
    std::shared_ptr<const QFunction> q;
  };
  using Rule = std::variant<TabularDet, OpenLoop, Greedy>;

  Policy(Rule rule, std::size_t id = 0) : rule_(std::move(rule)), id_(id) {}

  static Policy open_loop(std::vector<int> actions, std::size_t id = 0) {
    return Policy(OpenLoop{std::move(actions)}, id);
  }
  static Policy tabular(std::vector<std::vector<int>> table, std::size_t id = 0) {
    return Policy(TabularDet{std::move(table)}, id);
  }

  /// Action at step h (1-based) in state s; throws ConfigError when undefined.
  int action(int h, int s) const;

  /// Whether action(h, s) is defined (open-loop length, table coverage).
  bool defined(int h, int s) const noexcept;

  std::size_t id() const noexcept { return id_; }
  const Rule& rule() const noexcept { return rule_; }

 private:
  Rule rule_;
  std::size_t id_;
};

/// Every open-loop action sequence of length `horizon`, ids in lexicographic order.
std::vector<Policy> all_open_loop_policies(int num_actions, int horizon);

struct Distribution {
  std::vector<double> probs;

  double operator[](std::size_t i) const { return probs[i]; }
  std::size_t size() const noexcept { return probs.size(); }
  double sum() const noexcept;
  bool valid(double tol = 1e-9) const noexcept;
};

struct TabularStep {
  int h = 0;
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};
using TabularTrajectory = Trajectory<TabularStep>;

struct StepOutcome {
  int next_state;
  double reward;
};

/// Samples s' ~ P(.|s, a); the reward is R(s').
StepOutcome step(const TabularMDP& mdp, int s, int a, Rng& rng);

int sample_initial_state(const TabularMDP& mdp, Rng& rng);

/// One H-step episode following `policy`.
TabularTrajectory rollout(const TabularMDP& mdp, const Policy& policy, Rng& rng);

/// Exact law of s_h under `policy`, 0 <= h <= H.
Distribution state_distribution(const TabularMDP& model, const Policy& policy, int h);

/// All of s_0..s_H at once; element h equals state_distribution(model, policy, h).
std::vector<Distribution> state_distributions(const TabularMDP& model, const Policy& policy);

/// sum_{h=1..H} <P^{pi,h}_M, R>. `rewards` defaults to the model's own R.
double policy_value_exact(const TabularMDP& model, const Policy& policy);
double policy_value_exact(const TabularMDP& model, const Policy& policy,
                          std::span<const double> rewards);

/// Backward-induction optimum over all (history-free) deterministic policies.
struct OptimalSolution {
  double value = 0.0;
  Policy policy = Policy::tabular({});
  /// q[h-1][s * A + a]
  std::vector<std::vector<double>> q;
};
OptimalSolution solve_optimal(const TabularMDP& mdp);

/// L1 distance sum_i |p_i - q_i|; the total-variation norm used throughout
/// (the IPM with test functions bounded by 1 has this scale).
double l1_distance(std::span<const double> p, std::span<const double> q);

}  // namespace ne3

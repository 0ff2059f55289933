#include "ne3/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ne3/errors.hpp"

namespace ne3 {

namespace {

constexpr double kRowTol = 1e-9;

std::vector<double> point_mass(int num_states, int s) {
  if (s < 0 || s >= num_states) throw IndexError("initial state out of range");
  std::vector<double> init(static_cast<std::size_t>(num_states), 0.0);
  init[static_cast<std::size_t>(s)] = 1.0;
  return init;
}

}  // namespace

TabularMDP::TabularMDP(int num_states, int num_actions, int horizon,
                       std::vector<double> transitions, std::vector<double> rewards,
                       std::vector<double> initial)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      initial_(std::move(initial)) {
  validate();
}

TabularMDP::TabularMDP(int num_states, int num_actions, int horizon,
                       std::vector<double> transitions, std::vector<double> rewards,
                       int initial_state)
    : TabularMDP(num_states, num_actions, horizon, std::move(transitions), std::move(rewards),
                 point_mass(num_states, initial_state)) {}

TabularMDP TabularMDP::with_transitions(std::vector<double> transitions) const {
  return TabularMDP(num_states_, num_actions_, horizon_, std::move(transitions), rewards_,
                    initial_);
}

void TabularMDP::validate() const {
  if (num_states_ < 1 || num_actions_ < 1) throw ConfigError("MDP needs at least one state and action");
  if (horizon_ < 1) throw ConfigError("horizon must be at least 1");
  const auto S = static_cast<std::size_t>(num_states_);
  const auto A = static_cast<std::size_t>(num_actions_);
  if (transitions_.size() != S * A * S) throw ConfigError("transition tensor has wrong size");
  if (rewards_.size() != S) throw ConfigError("reward vector has wrong size");
  if (initial_.size() != S) throw ConfigError("initial distribution has wrong size");
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_actions_; ++a) {
      double total = 0.0;
      for (double p : row(s, a)) {
        if (!(p >= 0.0)) {
          throw ConfigError("negative or NaN transition probability at (s=" + std::to_string(s) +
                            ", a=" + std::to_string(a) + ")");
        }
        total += p;
      }
      if (std::abs(total - 1.0) > kRowTol) {
        throw ConfigError("transition row (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                          ") sums to " + std::to_string(total));
      }
    }
  }
  for (double r : rewards_) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rewards must lie in [0, 1]");
  }
  double init_total = 0.0;
  for (double p : initial_) {
    if (!(p >= 0.0)) throw ConfigError("negative initial probability");
    init_total += p;
  }
  if (std::abs(init_total - 1.0) > kRowTol) throw ConfigError("initial distribution must sum to 1");
}

void TabularMDP::check_state(int s) const {
  if (s < 0 || s >= num_states_) throw IndexError("state " + std::to_string(s) + " out of range");
}

void TabularMDP::check_action(int a) const {
  if (a < 0 || a >= num_actions_) throw IndexError("action " + std::to_string(a) + " out of range");
}

// --- Policy ---------------------------------------------------------------

int Policy::action(int h, int s) const {
  if (!defined(h, s)) {
    throw ConfigError("policy " + std::to_string(id_) + " undefined at step " + std::to_string(h) +
                      ", state " + std::to_string(s));
  }
  return std::visit(
      [&](const auto& r) -> int {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, TabularDet>) {
          return r.table[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)];
        } else if constexpr (std::is_same_v<T, OpenLoop>) {
          return r.actions[static_cast<std::size_t>(h - 1)];
        } else {
          int best = 0;
          double best_q = -std::numeric_limits<double>::infinity();
          for (int a = 0; a < r.q->num_actions(); ++a) {
            const double q = r.q->q(h, s, a);
            if (q > best_q) {
              best_q = q;
              best = a;
            }
          }
          return best;
        }
      },
      rule_);
}

bool Policy::defined(int h, int s) const noexcept {
  if (h < 1 || s < 0) return false;
  return std::visit(
      [&](const auto& r) -> bool {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, TabularDet>) {
          const auto hi = static_cast<std::size_t>(h - 1);
          return hi < r.table.size() && static_cast<std::size_t>(s) < r.table[hi].size();
        } else if constexpr (std::is_same_v<T, OpenLoop>) {
          return static_cast<std::size_t>(h - 1) < r.actions.size();
        } else {
          return r.q != nullptr && r.q->num_actions() > 0;
        }
      },
      rule_);
}

std::vector<Policy> all_open_loop_policies(int num_actions, int horizon) {
  if (num_actions < 1 || horizon < 0) throw ConfigError("bad open-loop enumeration shape");
  std::size_t count = 1;
  for (int h = 0; h < horizon; ++h) count *= static_cast<std::size_t>(num_actions);
  std::vector<Policy> out;
  out.reserve(count);
  for (std::size_t id = 0; id < count; ++id) {
    std::vector<int> seq(static_cast<std::size_t>(horizon));
    std::size_t code = id;
    for (int h = horizon; h-- > 0;) {
      seq[static_cast<std::size_t>(h)] = static_cast<int>(code % static_cast<std::size_t>(num_actions));
      code /= static_cast<std::size_t>(num_actions);
    }
    out.push_back(Policy::open_loop(std::move(seq), id));
  }
  return out;
}

// --- Distributions and sampling -------------------------------------------

double Distribution::sum() const noexcept {
  double t = 0.0;
  for (double p : probs) t += p;
  return t;
}

bool Distribution::valid(double tol) const noexcept {
  for (double p : probs)
    if (!(p >= 0.0)) return false;
  return std::abs(sum() - 1.0) <= tol;
}

double l1_distance(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return d;
}

namespace {

int sample_row(std::span<const double> row, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (u < row[i]) return static_cast<int>(i);
    u -= row[i];
  }
  for (std::size_t i = row.size(); i-- > 0;)
    if (row[i] > 0.0) return static_cast<int>(i);
  return static_cast<int>(row.size()) - 1;
}

}  // namespace

StepOutcome step(const TabularMDP& mdp, int s, int a, Rng& rng) {
  mdp.check_state(s);
  mdp.check_action(a);
  const int next = sample_row(mdp.row(s, a), rng);
  return {next, mdp.reward(next)};
}

int sample_initial_state(const TabularMDP& mdp, Rng& rng) { return sample_row(mdp.initial(), rng); }

TabularTrajectory rollout(const TabularMDP& mdp, const Policy& policy, Rng& rng) {
  TabularTrajectory traj;
  traj.seed = rng.next_u64();
  Rng local(traj.seed);
  int s = sample_initial_state(mdp, local);
  traj.steps.reserve(static_cast<std::size_t>(mdp.horizon()));
  for (int h = 1; h <= mdp.horizon(); ++h) {
    const int a = policy.action(h, s);
    const auto out = step(mdp, s, a, local);
    traj.steps.push_back(TabularStep{h, s, a, out.reward, out.next_state});
    s = out.next_state;
  }
  return traj;
}

std::vector<Distribution> state_distributions(const TabularMDP& model, const Policy& policy) {
  const int S = model.num_states();
  std::vector<Distribution> out;
  out.reserve(static_cast<std::size_t>(model.horizon()) + 1);
  out.push_back(Distribution{std::vector<double>(model.initial().begin(), model.initial().end())});
  for (int h = 1; h <= model.horizon(); ++h) {
    const auto& prev = out.back().probs;
    std::vector<double> next(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
      const double w = prev[static_cast<std::size_t>(s)];
      if (w == 0.0) continue;
      const auto row = model.row(s, policy.action(h, s));
      for (int n = 0; n < S; ++n) next[static_cast<std::size_t>(n)] += w * row[static_cast<std::size_t>(n)];
    }
    out.push_back(Distribution{std::move(next)});
  }
  return out;
}

Distribution state_distribution(const TabularMDP& model, const Policy& policy, int h) {
  if (h < 0 || h > model.horizon()) throw IndexError("step index " + std::to_string(h) + " out of range");
  auto all = state_distributions(model, policy);
  return std::move(all[static_cast<std::size_t>(h)]);
}

double policy_value_exact(const TabularMDP& model, const Policy& policy) {
  return policy_value_exact(model, policy, model.rewards());
}

double policy_value_exact(const TabularMDP& model, const Policy& policy,
                          std::span<const double> rewards) {
  if (rewards.size() != static_cast<std::size_t>(model.num_states())) {
    throw ConfigError("reward vector does not match the model");
  }
  const auto dists = state_distributions(model, policy);
  double value = 0.0;
  for (std::size_t h = 1; h < dists.size(); ++h) {
    for (std::size_t s = 0; s < rewards.size(); ++s) value += dists[h].probs[s] * rewards[s];
  }
  return value;
}

OptimalSolution solve_optimal(const TabularMDP& mdp) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  std::vector<double> v_next(static_cast<std::size_t>(S), 0.0);
  std::vector<std::vector<int>> table(static_cast<std::size_t>(H), std::vector<int>(static_cast<std::size_t>(S)));
  std::vector<std::vector<double>> q(static_cast<std::size_t>(H),
                                     std::vector<double>(static_cast<std::size_t>(S * A)));
  for (int h = H; h >= 1; --h) {
    std::vector<double> v(static_cast<std::size_t>(S));
    auto& qh = q[static_cast<std::size_t>(h - 1)];
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        double total = 0.0;
        const auto row = mdp.row(s, a);
        for (int n = 0; n < S; ++n) {
          total += row[static_cast<std::size_t>(n)] * (mdp.reward(n) + v_next[static_cast<std::size_t>(n)]);
        }
        qh[static_cast<std::size_t>(s * A + a)] = total;
        if (total > best) {
          best = total;
          best_a = a;
        }
      }
      v[static_cast<std::size_t>(s)] = best;
      table[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)] = best_a;
    }
    v_next = std::move(v);
  }
  double value = 0.0;
  for (int s = 0; s < S; ++s) value += mdp.initial()[static_cast<std::size_t>(s)] * v_next[static_cast<std::size_t>(s)];
  return OptimalSolution{value, Policy::tabular(std::move(table)), std::move(q)};
}

}  // namespace ne3

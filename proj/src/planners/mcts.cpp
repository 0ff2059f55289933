#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ne3/errors.hpp"
#include "ne3/planners.hpp"

namespace ne3::planners {

namespace {

struct MctsNode {
  int parent = -1;
  int action = -1;
  int depth = 0;  // actions from the root
  std::vector<int> children;
  std::size_t explored_children = 0;
  int visits = 0;
  double value = 0.0;
  bool sampled = false;
  double reward = 0.0;
  std::vector<StateBatch> samples;  // one K x m block per member
};

// Advances every member's block by `action` with common random numbers and
// returns the node reward.
double advance(std::vector<StateBatch>& samples, std::span<const StochasticModel* const> ensemble, int action,
               const MctsConfig& config, std::vector<std::vector<double>>& rewards, Rng& rng) {
  const std::uint64_t seed = rng.next_u64();
  for (std::size_t e = 0; e < ensemble.size(); ++e) {
    Rng shared(seed);
    rewards[e].assign(samples[e].rows(), 0.0);
    ensemble[e]->sample_batch(samples[e], action, rewards[e], shared);
  }
  return mcts_node_reward(samples, rewards, config.mode, config.metric);
}

}  // namespace

double mcts_node_reward(std::span<const StateBatch> samples, std::span<const std::vector<double>> rewards,
                        PlannerMode mode, ExploreMetric metric) {
  const std::size_t E = samples.size();
  if (E == 0) return 0.0;
  if (mode == PlannerMode::Exploit) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& r : rewards) {
      for (double x : r) total += x;
      count += r.size();
    }
    return count ? total / static_cast<double>(count) : 0.0;
  }

  double best = 0.0;
  if (metric == ExploreMetric::MeanL1) {
    const std::size_t m = samples[0].cols();
    std::vector<std::vector<double>> mu(E, std::vector<double>(m + 1, 0.0));
    for (std::size_t e = 0; e < E; ++e) {
      const auto K = static_cast<double>(samples[e].rows());
      for (std::size_t k = 0; k < samples[e].rows(); ++k) {
        const auto row = samples[e].row(k);
        for (std::size_t j = 0; j < m; ++j) mu[e][j] += row[j];
        mu[e][m] += rewards[e][k];
      }
      for (auto& x : mu[e]) x /= K;
    }
    for (std::size_t i = 0; i < E; ++i) {
      for (std::size_t j = i + 1; j < E; ++j) {
        double d = 0.0;
        for (std::size_t k = 0; k <= m; ++k) d += std::abs(mu[i][k] - mu[j][k]);
        best = std::max(best, d / static_cast<double>(m + 1));
      }
    }
    return best;
  }

  // Empirical distributions over exact patterns (state followed by reward).
  std::vector<std::map<std::vector<double>, double>> hist(E);
  for (std::size_t e = 0; e < E; ++e) {
    const auto K = static_cast<double>(samples[e].rows());
    for (std::size_t k = 0; k < samples[e].rows(); ++k) {
      const auto row = samples[e].row(k);
      std::vector<double> key(row.begin(), row.end());
      key.push_back(rewards[e][k]);
      hist[e][key] += 1.0 / K;
    }
  }
  for (std::size_t i = 0; i < E; ++i) {
    for (std::size_t j = i + 1; j < E; ++j) {
      double d = 0.0;
      for (const auto& [key, p] : hist[i]) {
        const auto it = hist[j].find(key);
        d += std::abs(p - (it == hist[j].end() ? 0.0 : it->second));
      }
      for (const auto& [key, q] : hist[j]) {
        if (!hist[i].count(key)) d += q;
      }
      best = std::max(best, d);
    }
  }
  return best;
}

MctsPlan mcts_plan(std::span<const double> start_obs, std::span<const StochasticModel* const> ensemble,
                   const MctsConfig& config, Rng& rng) {
  if (ensemble.empty()) throw ConfigError("MCTS needs at least one model");
  if (config.playouts < 1 || config.samples < 1) throw ConfigError("MCTS needs playouts >= 1 and samples >= 1");
  if (config.current_depth >= config.horizon) throw EpisodeOverError("no steps left to plan");
  const int A = ensemble.front()->num_actions();
  const auto K = static_cast<std::size_t>(config.samples);
  const std::size_t E = ensemble.size();

  std::vector<MctsNode> tree(1);
  tree[0].sampled = true;
  tree[0].samples.assign(E, StateBatch::replicate(start_obs, K));

  const auto terminal = [&](int depth) { return config.current_depth + depth >= config.horizon; };
  std::vector<std::vector<double>> rewards(E);
  MctsPlan plan;
  double best = -std::numeric_limits<double>::infinity();

  for (int k = 0; k < config.playouts; ++k) {
    double sum = 0.0;
    std::vector<int> actions;
    int id = 0;
    // Selection: unexplored children first, then UCB1.
    while (!tree[static_cast<std::size_t>(id)].children.empty()) {
      auto& node = tree[static_cast<std::size_t>(id)];
      int next;
      if (node.explored_children < node.children.size()) {
        next = node.children[node.explored_children++];
      } else {
        const double log_n = std::log(static_cast<double>(node.visits));
        next = node.children.front();
        double best_ucb = -std::numeric_limits<double>::infinity();
        for (int c : node.children) {
          const auto& ch = tree[static_cast<std::size_t>(c)];
          const double ucb = ch.value / ch.visits + config.ucb_c * std::sqrt(log_n / ch.visits);
          if (ucb > best_ucb) {
            best_ucb = ucb;
            next = c;
          }
        }
      }
      auto& child = tree[static_cast<std::size_t>(next)];
      if (!child.sampled) {
        child.samples = tree[static_cast<std::size_t>(child.parent)].samples;
        child.reward = advance(child.samples, ensemble, child.action, config, rewards, rng);
        child.sampled = true;
      }
      sum += child.reward;
      actions.push_back(child.action);
      id = next;
    }

    // Expansion.
    const int depth = tree[static_cast<std::size_t>(id)].depth;
    if (!terminal(depth)) {
      std::vector<int> order(static_cast<std::size_t>(A));
      for (int a = 0; a < A; ++a) order[static_cast<std::size_t>(a)] = a;
      rng.shuffle(order.begin(), order.end());
      for (int a : order) {
        MctsNode child;
        child.parent = id;
        child.action = a;
        child.depth = depth + 1;
        tree[static_cast<std::size_t>(id)].children.push_back(static_cast<int>(tree.size()));
        tree.push_back(std::move(child));
      }
    }

    // Playout with uniform actions.
    if (!terminal(static_cast<int>(actions.size()))) {
      auto samples = tree[static_cast<std::size_t>(id)].samples;
      while (!terminal(static_cast<int>(actions.size()))) {
        const int a = rng.uniform_index(static_cast<std::size_t>(A));
        sum += advance(samples, ensemble, a, config, rewards, rng);
        actions.push_back(a);
      }
    }

    if (sum > best) {
      best = sum;
      plan.actions = actions;
    }

    for (int i = id; i >= 0; i = tree[static_cast<std::size_t>(i)].parent) {
      ++tree[static_cast<std::size_t>(i)].visits;
      tree[static_cast<std::size_t>(i)].value += sum;
    }
  }

  plan.best_return = best;
  plan.root_visits = tree[0].visits;
  plan.child_visits.assign(static_cast<std::size_t>(A), 0);
  for (int c : tree[0].children) {
    plan.child_visits[static_cast<std::size_t>(tree[static_cast<std::size_t>(c)].action)] =
        tree[static_cast<std::size_t>(c)].visits;
  }
  plan.tree_size = tree.size();
  return plan;
}

}  // namespace ne3::planners

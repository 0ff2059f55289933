#pragma once

// Planning over a finite policy class, over deterministic ensembles with a
// distance-prioritized graph search, and over stochastic ensembles with MCTS.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ne3/env/episode.hpp"
#include "ne3/mdp.hpp"
#include "ne3/models.hpp"
#include "ne3/rng.hpp"

namespace ne3::planners {

enum class PlannerMode { Explore, Exploit };

struct SearchResult {
  std::size_t index = 0;
  double value = 0.0;
};

/// argmax of `values`, lowest index on ties. Throws ConfigError when empty.
SearchResult exhaustive_search(std::span<const double> values);

/// argmax over the class of `objective`, lowest index on ties.
SearchResult exhaustive_search(std::span<const Policy> policies, const std::function<double(const Policy&)>& objective);

struct DeterministicPlan {
  std::vector<int> actions;
  double utility_rate = 0.0;  // utility / |actions| of the returned node
  std::size_t graph_size = 0;
  std::size_t expansions = 0;
};

/// Graph search over the ensemble's joint predictions. Expands the node whose
/// mean state is farthest from every state already in the graph; the graph
/// never exceeds max_nodes. Returns the node with the best utility per step
/// (earliest inserted on ties), or an empty plan when the root cannot be
/// expanded.
DeterministicPlan deterministic_plan(std::span<const double> start, std::span<const DeterministicModel* const> ensemble,
                                     std::size_t max_nodes, PlannerMode mode);

enum class ExploreMetric {
  /// Largest mean absolute difference between two members' per-dimension
  /// sample means (reward appended as one more dimension).
  MeanL1,
  /// Largest L1 distance between two members' empirical distributions over
  /// exact observation patterns.
  PatternL1,
};

struct MctsConfig {
  int playouts = 200;
  int samples = 100;  // K per member
  int horizon = 1;    // episode length
  int current_depth = 0;
  PlannerMode mode = PlannerMode::Explore;
  double ucb_c = std::sqrt(2.0);
  ExploreMetric metric = ExploreMetric::MeanL1;
};

struct MctsPlan {
  std::vector<int> actions;  // best playout's full action sequence
  double best_return = 0.0;
  int root_visits = 0;
  std::vector<int> child_visits;  // indexed by action; 0 for unexpanded
  std::size_t tree_size = 0;
};

/// Monte-Carlo tree search whose nodes hold K sampled states per member.
/// Members sample with common random numbers, so identical members produce
/// identical samples and zero explore reward.
MctsPlan mcts_plan(std::span<const double> start_obs, std::span<const StochasticModel* const> ensemble,
                   const MctsConfig& config, Rng& rng);

/// Node reward of a sample block, exposed for tests. samples[e] holds member e's
/// K states, rewards[e] the matching rewards.
double mcts_node_reward(std::span<const StateBatch> samples, std::span<const std::vector<double>> rewards,
                        PlannerMode mode, ExploreMetric metric);

/// Returns an action sequence for (observation, steps taken so far).
using PlanFn = std::function<std::vector<int>(const env::Observation&, int)>;

struct ReplannedEpisode {
  env::EnvTrajectory trajectory;
  int planner_calls = 0;
};

/// One episode that calls `planner` whenever the current plan is used up.
/// With first_action_only only the first planned action is executed before
/// replanning. An empty plan falls back to a uniform random action.
ReplannedEpisode execute_with_replanning(env::Environment& env, const PlanFn& planner, bool first_action_only, Rng& rng);

}  // namespace ne3::planners

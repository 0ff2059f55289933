#pragma once

// Agents that act in an Environment: the disagreement-driven explorer with
// its two planners, the uniform-exploration ablation, offline Q-learning for
// exploitation, and an online epsilon-greedy Q baseline.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ne3/ensemble.hpp"
#include "ne3/env/environment.hpp"
#include "ne3/nn/mlp.hpp"
#include "ne3/planners.hpp"

namespace ne3::agents {

struct QConfig {
  std::vector<std::size_t> hidden = {64};
  double learning_rate = 1e-3;
  std::size_t minibatch = 32;
  std::size_t updates = 75000;  // a tenth of the original budget
  std::size_t target_refresh = 5000;
  double gamma = 0.99;
  /// Evaluate (when an evaluator is given) every this many updates and keep
  /// the best snapshot.
  std::size_t eval_every = 2500;

  void validate() const;
};

/// Observation -> one value per action, with a lagged target copy.
class QNetwork {
 public:
  QNetwork(std::size_t observation_size, int num_actions, const std::vector<std::size_t>& hidden, Rng& rng);

  std::vector<double> values(std::span<const double> obs) const;
  /// Greedy action, lowest index on ties.
  int greedy(std::span<const double> obs) const;
  int num_actions() const noexcept { return static_cast<int>(online.spec().output_size); }

  nn::Mlp online;
  nn::Mlp target;
  std::size_t updates = 0;
  std::size_t target_refreshes = 0;
};

using QEvaluator = std::function<double(const QNetwork&)>;

/// One double-Q update on a minibatch: y = r + gamma * Q_target(s', argmax
/// Q_online(s')), zero bootstrap at terminal steps. Refreshes the target
/// after every `target_refresh` updates. Returns the minibatch loss.
double q_update(QNetwork& q, nn::Adam& opt, std::span<const env::EnvStep> batch, const QConfig& config);

/// Trains on the buffer alone. With an evaluator, returns the best-scoring
/// snapshot seen at evaluation points (and at the end). Throws
/// EmptyBufferError on an empty buffer.
QNetwork offline_q_train(const EnvBuffer& buffer, std::size_t observation_size, int num_actions,
                         const QConfig& config, Rng& rng, const QEvaluator& evaluator = {});

enum class Phase { Explore, Exploit };
std::string to_string(Phase p);

struct EpisodeRecord {
  int episode = 0;
  Phase phase = Phase::Explore;
  double ret = 0.0;
  double wall_ms = 0.0;
};

enum class PlannerKind { Mcts, Deterministic };
enum class ExploitKind { OfflineQ, Planner };
enum class Exploration { Disagreement, Uniform };

struct AgentConfig {
  EnsembleConfig ensemble;
  PlannerKind planner = PlannerKind::Mcts;
  Exploration exploration = Exploration::Disagreement;
  ExploitKind exploit = ExploitKind::OfflineQ;
  int explore_episodes = 25;
  int episodes_per_epoch = 1;
  int exploit_episodes = 20;
  // MCTS
  int playouts = 100;
  int samples = 20;
  double ucb_c = 1.4142135623730951;
  planners::ExploreMetric metric = planners::ExploreMetric::MeanL1;
  // Deterministic planner
  std::size_t max_nodes = 2000;
  QConfig q;
  /// Episodes used to score Q snapshots (simulated, not logged).
  int q_eval_episodes = 10;
  bool record_timing = false;

  void validate() const;
};

struct AgentRun {
  std::vector<EpisodeRecord> records;
  std::vector<double> model_losses;     // mean member loss after each epoch
  std::vector<double> planned_explore;  // planner's explore value per planning call
  std::optional<QNetwork> q;
};

/// Exploration epochs (plan, execute with replanning, store, train), then
/// exploitation episodes with offline Q or the exploit-mode planner.
/// MCTS executes the first planned action only; the deterministic planner
/// executes whole plans. Exploration::Uniform gives the UE2 ablation, which
/// shares everything else.
AgentRun neural_e3_run(env::Environment& env, const AgentConfig& config, Rng& rng);

struct GreedyQConfig {
  QConfig q;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::size_t updates_per_step = 4;
  std::size_t warmup_transitions = 64;
};

/// Online epsilon-greedy double DQN: epsilon decays linearly over the
/// exploration episodes, then exploitation episodes act greedily.
AgentRun greedy_q_run(env::Environment& env, const GreedyQConfig& config, int explore_episodes, int exploit_episodes,
                      Rng& rng, bool record_timing = false);

}  // namespace ne3::agents

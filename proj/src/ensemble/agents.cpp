#include "ne3/agents.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "ne3/env/episode.hpp"
#include "ne3/errors.hpp"
#include "ne3/nn/losses.hpp"

namespace ne3::agents {

void QConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("Q learning rate must be positive");
  if (minibatch < 1 || target_refresh < 1) throw ConfigError("Q minibatch and target refresh must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
}

void AgentConfig::validate() const {
  ensemble.validate();
  q.validate();
  if (explore_episodes < 0 || exploit_episodes < 0) throw ConfigError("episode counts must be nonnegative");
  if (episodes_per_epoch < 1) throw ConfigError("episodes_per_epoch must be at least 1");
  if (playouts < 1 || samples < 1) throw ConfigError("MCTS needs playouts >= 1 and samples >= 1");
  if (max_nodes < 2) throw ConfigError("max_nodes must be at least 2");
}

std::string to_string(Phase p) { return p == Phase::Explore ? "explore" : "exploit"; }

QNetwork::QNetwork(std::size_t observation_size, int num_actions, const std::vector<std::size_t>& hidden, Rng& rng) {
  nn::MlpSpec spec;
  spec.input_size = observation_size;
  spec.num_actions = 1;
  spec.hidden = hidden;
  spec.output_size = static_cast<std::size_t>(num_actions);
  online = nn::Mlp(spec, rng);
  target = online;
}

std::vector<double> QNetwork::values(std::span<const double> obs) const { return online.forward(obs, 0).y; }

int QNetwork::greedy(std::span<const double> obs) const {
  const auto v = values(obs);
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double q_update(QNetwork& q, nn::Adam& opt, std::span<const env::EnvStep> batch, const QConfig& config) {
  std::vector<double> grad(q.online.param_count(), 0.0);
  double loss = 0.0;
  for (const auto& s : batch) {
    double y = s.reward;
    if (!s.done) {
      const auto next_online = q.online.forward(s.next_observation, 0).y;
      const auto a = std::max_element(next_online.begin(), next_online.end()) - next_online.begin();
      y += config.gamma * q.target.forward(s.next_observation, 0).y[static_cast<std::size_t>(a)];
    }
    loss += nn::q_regression(q.online, s.observation, s.action, y, &grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grad) g *= inv;
  opt.step(q.online.params(), grad);
  if (++q.updates % config.target_refresh == 0) {
    q.target = q.online;
    ++q.target_refreshes;
  }
  return loss * inv;
}

QNetwork offline_q_train(const EnvBuffer& buffer, std::size_t observation_size, int num_actions,
                         const QConfig& config, Rng& rng, const QEvaluator& evaluator) {
  config.validate();
  if (buffer.empty()) throw EmptyBufferError("offline Q training needs experience");
  QNetwork q(observation_size, num_actions, config.hidden, rng);
  nn::Adam opt(q.online.param_count(), config.learning_rate);
  const auto sampler = buffer.sampler(1);
  std::vector<env::EnvStep> batch(config.minibatch);

  std::optional<QNetwork> best;
  double best_score = -std::numeric_limits<double>::infinity();
  const auto consider = [&] {
    if (!evaluator) return;
    const double score = evaluator(q);
    if (score > best_score) {
      best_score = score;
      best = q;
    }
  };
  for (std::size_t u = 0; u < config.updates; ++u) {
    for (auto& s : batch) s = buffer.at(sampler.sample(rng));
    const double loss = q_update(q, opt, batch, config);
    if (!std::isfinite(loss)) throw TrainingDivergedError(0, "Q loss became non-finite");
    if (config.eval_every && (u + 1) % config.eval_every == 0) consider();
  }
  if (config.updates == 0 || !config.eval_every || config.updates % config.eval_every != 0) consider();
  return best ? *best : q;
}

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    if (!on_) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

AgentRun neural_e3_run(env::Environment& env, const AgentConfig& config, Rng& rng) {
  config.validate();
  AgentRun run;
  Ensemble ensemble(config.ensemble, env.observation_size(), env.num_actions(), rng);
  const auto det = ensemble.deterministic_views();
  const auto sto = ensemble.stochastic_views();
  const int A = env.num_actions();
  EnvBuffer buffer;
  int episode = 0;

  const auto plan_with = [&](planners::PlannerMode mode) -> planners::PlanFn {
    if (config.planner == PlannerKind::Mcts) {
      return [&, mode](const env::Observation& obs, int h) {
        planners::MctsConfig mc;
        mc.playouts = config.playouts;
        mc.samples = config.samples;
        mc.horizon = env.horizon();
        mc.current_depth = h;
        mc.mode = mode;
        mc.ucb_c = config.ucb_c;
        mc.metric = config.metric;
        auto plan = planners::mcts_plan(obs, sto, mc, rng);
        if (mode == planners::PlannerMode::Explore) run.planned_explore.push_back(plan.best_return);
        return plan.actions;
      };
    }
    return [&, mode](const env::Observation& obs, int) {
      auto plan = planners::deterministic_plan(obs, det, config.max_nodes, mode);
      if (mode == planners::PlannerMode::Explore) run.planned_explore.push_back(plan.utility_rate);
      return plan.actions;
    };
  };
  const bool first_only = config.planner == PlannerKind::Mcts;

  // Exploration.
  const auto explore_plan = plan_with(planners::PlannerMode::Explore);
  for (int done = 0; done < config.explore_episodes;) {
    std::vector<env::EnvTrajectory> epoch;
    for (int k = 0; k < config.episodes_per_epoch && done < config.explore_episodes; ++k, ++done) {
      const Stopwatch clock(config.record_timing);
      env::EnvTrajectory traj;
      if (config.exploration == Exploration::Uniform) {
        traj = env::run_episode(
            env, [&](const env::Observation&, int) { return rng.uniform_index(static_cast<std::size_t>(A)); }, rng);
      } else {
        traj = planners::execute_with_replanning(env, explore_plan, first_only, rng).trajectory;
      }
      run.records.push_back({episode++, Phase::Explore, env::episode_return(traj), clock.ms()});
      epoch.push_back(std::move(traj));
    }
    buffer.push(static_cast<std::size_t>(run.model_losses.size()), std::move(epoch));
    run.model_losses.push_back(mean(ensemble_update(ensemble, buffer, rng)));
  }

  // Exploitation.
  if (config.exploit == ExploitKind::OfflineQ) {
    if (buffer.empty()) {
      // Nothing was explored: act with an untrained network.
      run.q.emplace(env.observation_size(), A, config.q.hidden, rng);
    } else {
      Rng eval_rng = rng.split();
      const QEvaluator eval = [&](const QNetwork& q) {
        double total = 0.0;
        for (int i = 0; i < config.q_eval_episodes; ++i) {
          const auto t = env::run_episode(env, [&](const env::Observation& o, int) { return q.greedy(o); }, eval_rng);
          total += env::episode_return(t);
        }
        return total;
      };
      run.q = offline_q_train(buffer, env.observation_size(), A, config.q, rng,
                              config.q_eval_episodes > 0 ? eval : QEvaluator{});
    }
    for (int i = 0; i < config.exploit_episodes; ++i) {
      const Stopwatch clock(config.record_timing);
      const auto t = env::run_episode(env, [&](const env::Observation& o, int) { return run.q->greedy(o); }, rng);
      run.records.push_back({episode++, Phase::Exploit, env::episode_return(t), clock.ms()});
    }
  } else {
    const auto exploit_plan = plan_with(planners::PlannerMode::Exploit);
    for (int i = 0; i < config.exploit_episodes; ++i) {
      const Stopwatch clock(config.record_timing);
      const auto t = planners::execute_with_replanning(env, exploit_plan, first_only, rng).trajectory;
      run.records.push_back({episode++, Phase::Exploit, env::episode_return(t), clock.ms()});
    }
  }
  return run;
}

AgentRun greedy_q_run(env::Environment& env, const GreedyQConfig& config, int explore_episodes, int exploit_episodes,
                      Rng& rng, bool record_timing) {
  config.q.validate();
  AgentRun run;
  const int A = env.num_actions();
  QNetwork q(env.observation_size(), A, config.q.hidden, rng);
  nn::Adam opt(q.online.param_count(), config.q.learning_rate);
  EnvBuffer buffer;
  std::vector<env::EnvStep> batch(config.q.minibatch);
  int episode = 0;
  for (int e = 0; e < explore_episodes; ++e) {
    const double frac = explore_episodes > 1 ? static_cast<double>(e) / (explore_episodes - 1) : 1.0;
    const double eps = config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;
    const Stopwatch clock(record_timing);
    env::EnvTrajectory traj;
    env::Observation obs = env.reset(rng);
    while (!env.done()) {
      const int h = env.steps_elapsed();
      const int a = rng.bernoulli(eps) ? rng.uniform_index(static_cast<std::size_t>(A)) : q.greedy(obs);
      auto r = env.step(a, rng);
      env::EnvStep step{h + 1, obs, a, r.reward, r.observation, r.done};
      traj.steps.push_back(step);
      env::EnvTrajectory single;
      single.steps.push_back(std::move(step));
      buffer.push(static_cast<std::size_t>(e), std::move(single));
      obs = std::move(r.observation);
      if (buffer.num_transitions() >= config.warmup_transitions) {
        const auto sampler = buffer.sampler(1);
        for (std::size_t u = 0; u < config.updates_per_step; ++u) {
          for (auto& s : batch) s = buffer.at(sampler.sample(rng));
          q_update(q, opt, batch, config.q);
        }
      }
    }
    run.records.push_back({episode++, Phase::Explore, env::episode_return(traj), clock.ms()});
  }
  for (int i = 0; i < exploit_episodes; ++i) {
    const Stopwatch clock(record_timing);
    const auto t = env::run_episode(env, [&](const env::Observation& o, int) { return q.greedy(o); }, rng);
    run.records.push_back({episode++, Phase::Exploit, env::episode_return(t), clock.ms()});
  }
  run.q = std::move(q);
  return run;
}

}  // namespace ne3::agents

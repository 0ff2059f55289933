#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "ne3/dreem.hpp"
#include "ne3/env/combolock.hpp"
#include "ne3/env/maze.hpp"
#include "ne3/env/mountain_car.hpp"
#include "ne3/harness.hpp"

namespace ne3::harness {

namespace {

// Layout seed used when the config leaves env_seed unset.
constexpr std::uint64_t kLayoutSeedBase = 1000;

env::CombolockConfig lock_config(const EnvSpec& spec, std::uint64_t seed) {
  env::CombolockConfig c;
  c.horizon = spec.horizon;
  c.flip_prob = spec.flip_prob;
  c.noise_bits = spec.noise_bits;
  c.antishaped = spec.antishaped;
  c.env_seed = spec.env_seed.value_or(kLayoutSeedBase + seed);
  return c;
}

// Prints each freshly generated maze before handing back the observation.
class MazeDump : public env::Environment {
 public:
  MazeDump(std::unique_ptr<env::Environment> inner, std::ostream& out, std::uint64_t seed)
      : inner_(std::move(inner)), out_(out), seed_(seed) {}
  int num_actions() const override { return inner_->num_actions(); }
  int horizon() const override { return inner_->horizon(); }
  std::size_t observation_size() const override { return inner_->observation_size(); }
  env::Observation reset(Rng& rng) override {
    auto obs = inner_->reset(rng);
    const auto& maze = static_cast<env::MazeEnv&>(*inner_);
    static std::mutex lock;
    const std::lock_guard guard(lock);
    out_ << "seed " << seed_ << " episode " << episode_++ << '\n' << env::maze_ascii(maze.state()) << '\n';
    return obs;
  }
  env::StepResult step(int action, Rng& rng) override { return inner_->step(action, rng); }
  bool done() const override { return inner_->done(); }
  int steps_elapsed() const override { return inner_->steps_elapsed(); }

 private:
  std::unique_ptr<env::Environment> inner_;
  std::ostream& out_;
  std::uint64_t seed_;
  int episode_ = 0;
};

std::vector<CsvRow> rows_from(const agents::AgentRun& run, std::uint64_t seed, bool timing) {
  std::vector<CsvRow> rows;
  rows.reserve(run.records.size());
  for (const auto& r : run.records) rows.push_back({seed, r.episode, r.phase, r.ret, timing ? r.wall_ms : 0.0});
  return rows;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Uniform exploration straight into the buffer, then offline Q. No models.
std::vector<CsvRow> offline_q_only(env::Environment& env, const ExperimentConfig& c, std::uint64_t seed, Rng& rng) {
  const auto& a = c.neural;
  const int A = env.num_actions();
  std::vector<CsvRow> rows;
  EnvBuffer buffer;
  int episode = 0;
  for (int i = 0; i < a.explore_episodes; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto t = env::run_episode(env, [&](const env::Observation&, int) { return rng.uniform_index(static_cast<std::size_t>(A)); }, rng);
    rows.push_back({seed, episode++, agents::Phase::Explore, env::episode_return(t), c.record_timing ? elapsed_ms(t0) : 0.0});
    buffer.push(static_cast<std::size_t>(i / a.episodes_per_epoch), std::move(t));
  }
  std::optional<agents::QNetwork> q;
  if (buffer.empty()) {
    q.emplace(env.observation_size(), A, a.q.hidden, rng);
  } else {
    Rng eval_rng = rng.split();
    const agents::QEvaluator eval = [&](const agents::QNetwork& net) {
      double total = 0.0;
      for (int i = 0; i < a.q_eval_episodes; ++i)
        total += env::episode_return(env::run_episode(env, [&](const env::Observation& o, int) { return net.greedy(o); }, eval_rng));
      return total;
    };
    q = agents::offline_q_train(buffer, env.observation_size(), A, a.q, rng,
                                a.q_eval_episodes > 0 ? eval : agents::QEvaluator{});
  }
  for (int i = 0; i < a.exploit_episodes; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto t = env::run_episode(env, [&](const env::Observation& o, int) { return q->greedy(o); }, rng);
    rows.push_back({seed, episode++, agents::Phase::Exploit, env::episode_return(t), c.record_timing ? elapsed_ms(t0) : 0.0});
  }
  return rows;
}

// DREEM on the lock's latent model. Each round contributes one episode of
// its exploration policy; the exploit policy is then played for
// exploit_episodes. Open-loop policies act on the real environment.
std::vector<CsvRow> dreem_rows(const ExperimentConfig& c, std::uint64_t seed, Rng& rng) {
  const auto cfg = lock_config(c.env, seed);
  env::Combolock lock(cfg);
  const auto truth = env::true_tabular_model(cfg, lock.layout());
  const auto cls = dreem::perturbed_class(truth, static_cast<std::size_t>(c.dreem.perturbations), rng);
  const auto policies = all_open_loop_policies(truth.num_actions(), truth.horizon());
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = dreem::dreem_run(cls, policies, truth, c.dreem.config, rng);
  const double per_round = c.record_timing && result.rounds ? elapsed_ms(t0) / static_cast<double>(result.rounds) : 0.0;

  const auto play = [&](const Policy& pi) {
    return env::episode_return(env::run_episode(lock, [&](const env::Observation& o, int h) {
      return pi.action(h + 1, combolock_state_index(cfg, lock.decode(o)));
    }, rng));
  };
  std::vector<CsvRow> rows;
  int episode = 0;
  for (const auto& round : result.version_space.history)
    rows.push_back({seed, episode++, agents::Phase::Explore, play(policies[round.explore_policy]), per_round});
  for (int i = 0; i < c.neural.exploit_episodes; ++i) {
    const auto t1 = std::chrono::steady_clock::now();
    const double ret = play(result.exploit_policy);
    rows.push_back({seed, episode++, agents::Phase::Exploit, ret, c.record_timing ? elapsed_ms(t1) : 0.0});
  }
  return rows;
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::unique_ptr<env::Environment> make_environment(const EnvSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case EnvKind::Combolock:
      return std::make_unique<env::Combolock>(lock_config(spec, seed));
    case EnvKind::Maze: {
      env::MazeConfig m;
      m.size = spec.size;
      if (spec.time_limit > 0) m.time_limit = spec.time_limit;
      return std::make_unique<env::MazeEnv>(m);
    }
    case EnvKind::MountainCar: {
      env::MountainCarConfig m;
      if (spec.time_limit > 0) m.time_limit = spec.time_limit;
      return std::make_unique<env::MountainCar>(m);
    }
  }
  throw ConfigError("unknown environment kind");
}

std::vector<CsvRow> run_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* maze_ascii) {
  Rng rng(seed);
  if (config.agent == AgentKind::Dreem) return dreem_rows(config, seed, rng);

  auto env = make_environment(config.env, seed);
  if (maze_ascii && config.env.kind == EnvKind::Maze) env = std::make_unique<MazeDump>(std::move(env), *maze_ascii, seed);

  switch (config.agent) {
    case AgentKind::NeuralE3:
    case AgentKind::Ue2: {
      auto a = config.neural;
      a.exploration = config.agent == AgentKind::Ue2 ? agents::Exploration::Uniform : agents::Exploration::Disagreement;
      a.record_timing = config.record_timing;
      return rows_from(agents::neural_e3_run(*env, a, rng), seed, config.record_timing);
    }
    case AgentKind::GreedyQ:
      return rows_from(agents::greedy_q_run(*env, config.greedy, config.neural.explore_episodes,
                                            config.neural.exploit_episodes, rng, config.record_timing),
                       seed, config.record_timing);
    case AgentKind::OfflineQOnly:
      return offline_q_only(*env, config, seed, rng);
    case AgentKind::Dreem:
      break;
  }
  throw ConfigError("unknown agent kind");
}

RunOptions with_environment_overrides(RunOptions options) {
  if (!options.out_dir) {
    if (const char* dir = std::getenv("NE3_OUT_DIR"); dir && *dir) options.out_dir = dir;
  }
  if (!options.threads) {
    if (const char* t = std::getenv("NE3_THREADS"); t && *t) {
      char* end = nullptr;
      const long n = std::strtol(t, &end, 10);
      if (*end != '\0' || n < 1) throw SchemaError("NE3_THREADS", "expected a positive integer");
      options.threads = static_cast<int>(n);
    }
  }
  return options;
}

RunOutput run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const std::filesystem::path dir = options.out_dir.value_or(config.output);
  const int threads = std::max(1, options.threads.value_or(config.threads));
  std::filesystem::create_directories(dir);

  std::vector<std::uint64_t> seeds;
  for (auto s : config.seeds) seeds.push_back(s + options.seed_offset);

  nlohmann::json manifest = {{"config", to_json(config)},
                             {"config_hash", config_hash(config)},
                             {"version", NE3_VERSION},
                             {"seed_offset", options.seed_offset},
                             {"threads", threads},
                             {"started_at", timestamp()}};

  std::vector<std::vector<CsvRow>> results(seeds.size());
  std::vector<std::string> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next++) < seeds.size();) {
      try {
        results[i] = run_seed(config, seeds[i], options.maze_ascii);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown failure";
      }
    }
  };
  std::vector<std::thread> pool;
  const auto width = std::min<std::size_t>(static_cast<std::size_t>(threads), seeds.size());
  for (std::size_t t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  RunOutput out;
  out.csv = dir / (config.name + ".csv");
  out.manifest = dir / (config.name + ".manifest.json");
  nlohmann::json seed_list = nlohmann::json::array();
  nlohmann::json error_list = nlohmann::json::array();
  std::size_t rows = 0;
  {
    std::ofstream csv(out.csv, std::ios::binary | std::ios::trunc);
    if (!csv) throw ConfigError("cannot write " + out.csv.string());
    std::vector<CsvRow> all;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      seed_list.push_back({{"seed", seeds[i]}, {"rng_seed", seeds[i]}, {"status", errors[i].empty() ? "ok" : "error"}});
      if (!errors[i].empty()) {
        error_list.push_back({{"seed", seeds[i]}, {"message", errors[i]}});
        continue;
      }
      all.insert(all.end(), results[i].begin(), results[i].end());
    }
    write_csv(csv, all);
    rows = all.size();
  }
  manifest["seeds"] = std::move(seed_list);
  manifest["rows"] = rows;
  manifest["finished_at"] = timestamp();
  manifest["status"] = error_list.empty() ? "ok" : "error";
  if (!error_list.empty()) manifest["errors"] = error_list;
  {
    std::ofstream m(out.manifest, std::ios::binary | std::ios::trunc);
    m << manifest.dump(2) << '\n';
  }
  out.manifest_json = std::move(manifest);
  if (!error_list.empty()) {
    throw AgentFailureError("seed " + error_list.front()["seed"].dump() + ": " +
                            error_list.front()["message"].get<std::string>());
  }
  return out;
}

}  // namespace ne3::harness

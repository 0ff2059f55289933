#include "ne3/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>

#include "ne3/errors.hpp"

#ifdef NE3_HAVE_OPENMP
#include <omp.h>
#endif

namespace ne3 {

void EnsembleConfig::validate() const {
  if (size < 1) throw ConfigError("ensemble needs at least one member");
  if (unroll < 1) throw ConfigError("unroll must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (minibatch < 1) throw ConfigError("minibatch must be at least 1");
}

Ensemble::Ensemble(const EnsembleConfig& config, std::size_t observation_size, int num_actions, Rng& rng)
    : config_(config) {
  config_.validate();
  nn::MlpSpec spec;
  spec.input_size = observation_size;
  spec.num_actions = num_actions;
  spec.hidden = config_.hidden;
  spec.output_size = observation_size;
  spec.reward_head = !config_.hidden.empty();
  spec.action_input = config_.action_input;
  for (int i = 0; i < config_.size; ++i) {
    Rng member_rng = rng.split();
    members_.emplace_back(spec, member_rng);
    optimizers_.emplace_back(members_.back().param_count(), config_.learning_rate);
  }
  for (const auto& m : members_) {
    det_.push_back(std::make_unique<NeuralDeterministicModel>(m));
    sto_.push_back(std::make_unique<NeuralBernoulliModel>(m));
  }
}

std::vector<const DeterministicModel*> Ensemble::deterministic_views() const {
  std::vector<const DeterministicModel*> out;
  for (const auto& m : det_) out.push_back(m.get());
  return out;
}

std::vector<const StochasticModel*> Ensemble::stochastic_views() const {
  std::vector<const StochasticModel*> out;
  for (const auto& m : sto_) out.push_back(m.get());
  return out;
}

namespace {

// One epoch of training for a single member.
double train_member(nn::Mlp& net, nn::Adam& opt, const EnsembleConfig& cfg, const EnvBuffer& buffer,
                    const EnvBuffer::Sampler& sampler, Rng& rng, std::size_t member) {
  std::vector<double> grad(net.param_count());
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(cfg.minibatch);
  for (std::size_t u = 0; u < cfg.updates_per_epoch; ++u) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.minibatch; ++b) {
      const auto ref = sampler.sample(rng);
      const auto& traj = buffer.trajectory(ref);
      if (cfg.stochastic) {
        const auto& s = traj.steps[ref.step];
        loss += nn::bernoulli_nll(net, s.observation, s.action, s.next_observation, &grad);
        loss += cfg.reward_weight * nn::reward_mse(net, s.observation, s.action, s.reward, &grad);
      } else {
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.unroll), traj.size() - ref.step);
        std::vector<std::vector<double>> states{traj.steps[ref.step].observation};
        std::vector<int> actions;
        std::vector<double> rewards;
        for (std::size_t j = 0; j < k; ++j) {
          const auto& s = traj.steps[ref.step + j];
          states.push_back(s.next_observation);
          actions.push_back(s.action);
          rewards.push_back(s.reward);
        }
        loss += nn::multistep_loss(net, states, actions, rewards, cfg.reward_weight, &grad);
      }
    }
    loss *= inv;
    if (!std::isfinite(loss)) throw TrainingDivergedError(member, "loss became non-finite");
    for (auto& g : grad) g *= inv;
    opt.step(net.params(), grad);
    total += loss;
  }
  for (double p : net.params())
    if (!std::isfinite(p)) throw TrainingDivergedError(member, "parameters became non-finite");
  return cfg.updates_per_epoch ? total / static_cast<double>(cfg.updates_per_epoch) : 0.0;
}

}  // namespace

std::vector<double> ensemble_update(Ensemble& ensemble, const EnvBuffer& buffer, Rng& rng) {
  if (buffer.empty()) throw EmptyBufferError("ensemble update needs experience");
  const auto sampler = buffer.sampler(1);
  const auto E = static_cast<int>(ensemble.size());
  std::vector<Rng> rngs;
  for (int i = 0; i < E; ++i) rngs.push_back(rng.split());
  std::vector<double> losses(static_cast<std::size_t>(E), 0.0);
  std::exception_ptr failure;
#ifdef NE3_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < E; ++i) {
    try {
      const auto u = static_cast<std::size_t>(i);
      losses[u] = train_member(ensemble.member(u), ensemble.optimizer(u), ensemble.config(), buffer, sampler, rngs[u], u);
    } catch (...) {
#ifdef NE3_HAVE_OPENMP
#pragma omp critical(ne3_ensemble_failure)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return losses;
}

Prediction NeuralDeterministicModel::predict(std::span<const double> state, int action) const {
  auto out = net_->forward(state, action);
  return Prediction{std::move(out.y), out.reward};
}

namespace kernels {

namespace {
void bernoulli_row(const nn::Mlp& net, std::span<double> row, int action, const double* u, double& reward) {
  const auto out = net.forward(row, action);
  const auto p = nn::bernoulli_probs(out);
  for (std::size_t k = 0; k < p.size(); ++k) row[k] = u[k] < p[k] ? 1.0 : 0.0;
  reward = out.reward;
}
}  // namespace

void serial::bernoulli_step(const nn::Mlp& net, StateBatch& states, int action, std::span<const double> uniforms,
                            std::span<double> rewards) {
  const std::size_t m = states.cols();
  for (std::size_t r = 0; r < states.rows(); ++r) bernoulli_row(net, states.row(r), action, uniforms.data() + r * m, rewards[r]);
}

void omp::bernoulli_step(const nn::Mlp& net, StateBatch& states, int action, std::span<const double> uniforms,
                         std::span<double> rewards) {
  const std::size_t m = states.cols();
  const auto rows = static_cast<long>(states.rows());
#ifdef NE3_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (rows >= 64)
#endif
  for (long r = 0; r < rows; ++r) {
    const auto u = static_cast<std::size_t>(r);
    bernoulli_row(net, states.row(u), action, uniforms.data() + u * m, rewards[u]);
  }
}

}  // namespace kernels

void NeuralBernoulliModel::sample_batch(StateBatch& states, int action, std::span<double> rewards, Rng& rng) const {
  if (states.cols() != state_size()) throw ConfigError("state batch has the wrong width");
  if (rewards.size() != states.rows()) throw ConfigError("reward buffer has the wrong length");
  std::vector<double> u(states.rows() * states.cols());
  for (auto& x : u) x = rng.uniform();
#ifdef NE3_HAVE_OPENMP
  kernels::omp::bernoulli_step(*net_, states, action, u, rewards);
#else
  kernels::serial::bernoulli_step(*net_, states, action, u, rewards);
#endif
}

std::vector<std::vector<double>> sample_stochastic(const nn::Mlp& net, std::span<const double> state, int action,
                                                   std::size_t count, Rng& rng) {
  std::vector<std::vector<double>> out;
  if (count == 0) return out;
  const auto p = nn::bernoulli_probs(net.forward(state, action));
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> bits(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) bits[k] = rng.uniform() < p[k] ? 1.0 : 0.0;
    out.push_back(std::move(bits));
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'N', 'E', '3', 'M'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw ConfigError("checkpoint is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::span<const nn::Mlp> nets) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(nets.size()));
  for (const auto& n : nets) {
    const auto& s = n.spec();
    put<std::uint64_t>(os, s.input_size);
    put<std::int32_t>(os, s.num_actions);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(s.action_input));
    put<std::uint8_t>(os, s.reward_head ? 1 : 0);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.hidden.size()));
    for (auto h : s.hidden) put<std::uint64_t>(os, h);
    put<std::uint64_t>(os, s.output_size);
    put<std::uint64_t>(os, n.param_count());
    for (double p : n.params()) put<double>(os, p);
  }
  if (!os) throw ConfigError("failed writing checkpoint " + path.string());
}

std::vector<nn::Mlp> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read checkpoint " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not an NE3M checkpoint");
  if (get<std::uint32_t>(is) != kVersion) throw ConfigError("unsupported checkpoint version");
  const auto count = get<std::uint32_t>(is);
  std::vector<nn::Mlp> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    nn::MlpSpec s;
    s.input_size = get<std::uint64_t>(is);
    s.num_actions = get<std::int32_t>(is);
    const auto mode = get<std::uint8_t>(is);
    if (mode > 2) throw ConfigError("unknown action input mode in checkpoint");
    s.action_input = static_cast<nn::ActionInput>(mode);
    s.reward_head = get<std::uint8_t>(is) != 0;
    const auto layers = get<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < layers; ++k) s.hidden.push_back(get<std::uint64_t>(is));
    s.output_size = get<std::uint64_t>(is);
    std::vector<double> params(get<std::uint64_t>(is));
    for (auto& p : params) p = get<double>(is);
    out.emplace_back(std::move(s), std::move(params));
  }
  return out;
}

}  // namespace ne3

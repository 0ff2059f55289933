#pragma once

// Ensembles of learned dynamics models and their adapters to the planner
// interfaces.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "ne3/env/episode.hpp"
#include "ne3/models.hpp"
#include "ne3/nn/losses.hpp"
#include "ne3/nn/mlp.hpp"
#include "ne3/replay_buffer.hpp"
#include "ne3/rng.hpp"

namespace ne3 {

using EnvBuffer = ReplayBuffer<env::EnvStep>;

struct EnsembleConfig {
  int size = 4;
  int unroll = 1;  // K in the multi-step loss
  double learning_rate = 1e-3;
  std::size_t minibatch = 32;
  std::size_t updates_per_epoch = 100;
  bool stochastic = false;  // Bernoulli bit outputs instead of vector regression
  std::vector<std::size_t> hidden = {64};
  nn::ActionInput action_input = nn::ActionInput::Gate;
  double reward_weight = 1.0;

  void validate() const;
};

/// Independently initialized members, each with its own optimizer state.
class Ensemble {
 public:
  Ensemble(const EnsembleConfig& config, std::size_t observation_size, int num_actions, Rng& rng);
  Ensemble(const Ensemble&) = delete;
  Ensemble& operator=(const Ensemble&) = delete;

  const EnsembleConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return members_.size(); }
  nn::Mlp& member(std::size_t i) { return members_[i]; }
  const nn::Mlp& member(std::size_t i) const { return members_[i]; }
  nn::Adam& optimizer(std::size_t i) { return optimizers_[i]; }

  /// Planner views of the members. Valid while the ensemble lives; the
  /// adapters read current parameters, so they track training.
  std::vector<const DeterministicModel*> deterministic_views() const;
  std::vector<const StochasticModel*> stochastic_views() const;

 private:
  EnsembleConfig config_;
  std::vector<nn::Mlp> members_;
  std::vector<nn::Adam> optimizers_;
  std::vector<std::unique_ptr<DeterministicModel>> det_;
  std::vector<std::unique_ptr<StochasticModel>> sto_;
};

/// updates_per_epoch Adam steps per member on independent prioritized
/// minibatches. Deterministic members train on K-step segments (shorter at
/// episode ends); stochastic members on single transitions. Returns each
/// member's mean loss over the epoch. Throws TrainingDivergedError on a
/// non-finite loss or parameter, EmptyBufferError on an empty buffer.
std::vector<double> ensemble_update(Ensemble& ensemble, const EnvBuffer& buffer, Rng& rng);

/// Deterministic vector-regression view of a network.
class NeuralDeterministicModel : public DeterministicModel {
 public:
  explicit NeuralDeterministicModel(const nn::Mlp& net) : net_(&net) {}
  std::size_t state_size() const override { return net_->spec().input_size; }
  int num_actions() const override { return net_->spec().num_actions; }
  Prediction predict(std::span<const double> state, int action) const override;

 private:
  const nn::Mlp* net_;
};

/// Factorized-Bernoulli view. sample_batch draws all uniforms up front from
/// the caller's generator, so the OpenMP and serial paths agree bit for bit.
class NeuralBernoulliModel : public StochasticModel {
 public:
  explicit NeuralBernoulliModel(const nn::Mlp& net) : net_(&net) {}
  std::size_t state_size() const override { return net_->spec().input_size; }
  int num_actions() const override { return net_->spec().num_actions; }
  void sample_batch(StateBatch& states, int action, std::span<double> rewards, Rng& rng) const override;

 private:
  const nn::Mlp* net_;
};

/// `count` independent next-state bit vectors for one (state, action).
std::vector<std::vector<double>> sample_stochastic(const nn::Mlp& net, std::span<const double> state, int action,
                                                   std::size_t count, Rng& rng);

namespace kernels {
namespace serial {
/// Samples successors of every row in place from pre-drawn uniforms
/// (rows * output_size of them).
void bernoulli_step(const nn::Mlp& net, StateBatch& states, int action, std::span<const double> uniforms,
                    std::span<double> rewards);
}  // namespace serial
namespace omp {
void bernoulli_step(const nn::Mlp& net, StateBatch& states, int action, std::span<const double> uniforms,
                    std::span<double> rewards);
}  // namespace omp
}  // namespace kernels

/// Versioned binary checkpoint: "NE3M", u32 version, spec, then
/// little-endian float64 parameters in layer order. See docs/checkpoint.md.
void save_checkpoint(const std::filesystem::path& path, std::span<const nn::Mlp> nets);
std::vector<nn::Mlp> load_checkpoint(const std::filesystem::path& path);

}  // namespace ne3

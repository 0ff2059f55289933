#pragma once

// Training losses. Each returns the loss value and, when `grad` is given,
// adds dL/dparams into it.

#include <span>
#include <vector>

#include "ne3/nn/mlp.hpp"

namespace ne3::nn {

inline constexpr double kProbClamp = 1e-6;

/// K-step unrolled squared error: the first step reads states[0], later steps
/// read the model's own previous prediction, and step j is scored against
/// states[j]. `states` has K+1 entries and `actions` K. With a reward head and
/// nonempty `rewards` (K entries) the squared reward error is added with
/// weight `reward_weight`. Gradients flow through the whole unroll.
double multistep_loss(const Mlp& model, std::span<const std::vector<double>> states, std::span<const int> actions,
                      std::span<const double> rewards, double reward_weight, std::vector<double>* grad);

/// Per-bit Bernoulli probabilities sigmoid(y) clamped to [1e-6, 1 - 1e-6].
std::vector<double> bernoulli_probs(const MlpOutput& out);

/// Negative log-likelihood of the bit vector `next` under the model's
/// factorized Bernoulli output; summed over bits.
double bernoulli_nll(const Mlp& model, std::span<const double> state, int action, std::span<const double> next,
                     std::vector<double>* grad);

struct BitTransition {
  std::vector<double> state;
  int action = 0;
  std::vector<double> next;
  double reward = 0.0;
};

/// Batch mean of bernoulli_nll (gradient scaled accordingly). Throws
/// InsufficientDataError on an empty batch.
double bernoulli_nll_batch(const Mlp& model, std::span<const BitTransition> batch, std::vector<double>* grad);

/// (reward_head(state, action) - target)^2.
double reward_mse(const Mlp& model, std::span<const double> state, int action, double target,
                  std::vector<double>* grad);

/// (Q(state)[action] - target)^2 for a network whose outputs are action values.
double q_regression(const Mlp& q, std::span<const double> state, int action, double target, std::vector<double>* grad);

}  // namespace ne3::nn

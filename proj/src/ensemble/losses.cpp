#include "ne3/nn/losses.hpp"

#include <algorithm>
#include <cmath>

#include "ne3/errors.hpp"

namespace ne3::nn {

double multistep_loss(const Mlp& model, std::span<const std::vector<double>> states, std::span<const int> actions,
                      std::span<const double> rewards, double reward_weight, std::vector<double>* grad) {
  const std::size_t K = actions.size();
  if (K == 0 || states.size() != K + 1) throw ConfigError("multistep loss needs K actions and K+1 states");
  const bool use_reward = model.spec().reward_head && !rewards.empty();
  if (use_reward && rewards.size() != K) throw ConfigError("multistep loss needs one reward per action");
  const std::size_t m = model.spec().input_size;

  std::vector<Tape> tapes(K);
  std::vector<MlpOutput> outs(K);
  double loss = 0.0;
  std::vector<double> input(states[0].begin(), states[0].end());
  for (std::size_t j = 0; j < K; ++j) {
    outs[j] = model.forward(input, actions[j], grad ? &tapes[j] : nullptr);
    for (std::size_t k = 0; k < m; ++k) {
      const double e = outs[j].y[k] - states[j + 1][k];
      loss += e * e;
    }
    if (use_reward) {
      const double e = outs[j].reward - rewards[j];
      loss += reward_weight * e * e;
    }
    input = outs[j].y;
  }
  if (!grad) return loss;

  // Reverse pass: the gradient reaching prediction j comes from its own error
  // and from every later step through the fed-back input.
  std::vector<double> carry(m, 0.0), dy(m), dx(m);
  for (std::size_t j = K; j-- > 0;) {
    for (std::size_t k = 0; k < m; ++k) dy[k] = 2.0 * (outs[j].y[k] - states[j + 1][k]) + carry[k];
    const double dr = use_reward ? 2.0 * reward_weight * (outs[j].reward - rewards[j]) : 0.0;
    model.backward(tapes[j], dy, dr, *grad, j > 0 ? std::span<double>(dx) : std::span<double>());
    if (j > 0) carry = dx;
  }
  return loss;
}

std::vector<double> bernoulli_probs(const MlpOutput& out) {
  std::vector<double> p(out.y.size());
  for (std::size_t k = 0; k < p.size(); ++k)
    p[k] = std::clamp(1.0 / (1.0 + std::exp(-out.y[k])), kProbClamp, 1.0 - kProbClamp);
  return p;
}

double bernoulli_nll(const Mlp& model, std::span<const double> state, int action, std::span<const double> next,
                     std::vector<double>* grad) {
  if (next.size() != model.spec().output_size) throw ConfigError("target bits have the wrong length");
  Tape tape;
  const auto out = model.forward(state, action, grad ? &tape : nullptr);
  const auto p = bernoulli_probs(out);
  double loss = 0.0;
  std::vector<double> dy(p.size(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    loss -= next[k] * std::log(p[k]) + (1.0 - next[k]) * std::log(1.0 - p[k]);
    // Inside the clamp d/dy of the loss is p - x; on the clamp it is 0.
    const bool clamped = p[k] == kProbClamp || p[k] == 1.0 - kProbClamp;
    if (!clamped) dy[k] = p[k] - next[k];
  }
  if (grad) model.backward(tape, dy, 0.0, *grad);
  return loss;
}

double bernoulli_nll_batch(const Mlp& model, std::span<const BitTransition> batch, std::vector<double>* grad) {
  if (batch.empty()) throw InsufficientDataError("empty training batch");
  std::vector<double> local;
  if (grad) local.assign(model.param_count(), 0.0);
  double loss = 0.0;
  for (const auto& t : batch) loss += bernoulli_nll(model, t.state, t.action, t.next, grad ? &local : nullptr);
  const double inv = 1.0 / static_cast<double>(batch.size());
  if (grad)
    for (std::size_t i = 0; i < local.size(); ++i) (*grad)[i] += local[i] * inv;
  return loss * inv;
}

double reward_mse(const Mlp& model, std::span<const double> state, int action, double target,
                  std::vector<double>* grad) {
  if (!model.spec().reward_head) throw ConfigError("network has no reward head");
  Tape tape;
  const auto out = model.forward(state, action, grad ? &tape : nullptr);
  const double e = out.reward - target;
  if (grad) {
    const std::vector<double> dy(out.y.size(), 0.0);
    model.backward(tape, dy, 2.0 * e, *grad);
  }
  return e * e;
}

double q_regression(const Mlp& q, std::span<const double> state, int action, double target, std::vector<double>* grad) {
  if (action < 0 || static_cast<std::size_t>(action) >= q.spec().output_size) throw IndexError("action out of range");
  Tape tape;
  const auto out = q.forward(state, 0, grad ? &tape : nullptr);
  const double e = out.y[static_cast<std::size_t>(action)] - target;
  if (grad) {
    std::vector<double> dy(out.y.size(), 0.0);
    dy[static_cast<std::size_t>(action)] = 2.0 * e;
    q.backward(tape, dy, 0.0, *grad);
  }
  return e * e;
}

}  // namespace ne3::nn

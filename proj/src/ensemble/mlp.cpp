#include "ne3/nn/mlp.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "ne3/errors.hpp"

namespace ne3::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMat = Eigen::Map<const RowMat>;
using Mat = Eigen::Map<RowMat>;
using CVec = Eigen::Map<const Eigen::VectorXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

double leaky(double z) { return z > 0.0 ? z : kLeakySlope * z; }
double leaky_grad(double z) { return z > 0.0 ? 1.0 : kLeakySlope; }

}  // namespace

void MlpSpec::validate() const {
  if (input_size == 0 || output_size == 0) throw ConfigError("network needs nonzero input and output sizes");
  if (num_actions < 1) throw ConfigError("network needs at least one action");
  for (auto h : hidden)
    if (h == 0) throw ConfigError("hidden layers must be nonempty");
  if (action_input == ActionInput::Gate && hidden.empty()) throw ConfigError("gated action input needs a hidden layer");
  if (reward_head && hidden.empty()) throw ConfigError("reward head needs a hidden layer");
}

void Mlp::layout() {
  spec_.validate();
  layers_.clear();
  std::size_t in = spec_.input_size + (spec_.action_input == ActionInput::Concat ? spec_.num_actions : 0);
  std::size_t offset = 0;
  auto add = [&](std::size_t out) {
    Layer l{in, out, offset, offset + in * out};
    offset = l.b + out;
    layers_.push_back(l);
    in = out;
  };
  for (auto h : spec_.hidden) add(h);
  add(spec_.output_size);
  gate_offset_ = offset;
  if (spec_.action_input == ActionInput::Gate) offset += static_cast<std::size_t>(spec_.num_actions) * spec_.hidden[0];
  reward_offset_ = offset;
  if (spec_.reward_head) offset += spec_.hidden.back() + 1;
  params_.assign(offset, 0.0);
}

Mlp::Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
  layout();
  for (const auto& l : layers_) {
    const double r = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (std::size_t i = 0; i < l.in * l.out; ++i) params_[l.w + i] = rng.uniform(-r, r);
  }
  if (spec_.action_input == ActionInput::Gate)
    for (std::size_t i = gate_offset_; i < reward_offset_; ++i) params_[i] = rng.uniform(0.5, 1.5);
  if (spec_.reward_head) {
    const double r = 1.0 / std::sqrt(static_cast<double>(spec_.hidden.back()));
    for (std::size_t i = 0; i < spec_.hidden.back(); ++i) params_[reward_offset_ + i] = rng.uniform(-r, r);
  }
}

Mlp::Mlp(MlpSpec spec, std::vector<double> params) : spec_(std::move(spec)) {
  layout();
  if (params.size() != params_.size()) throw ConfigError("parameter vector does not match the network shape");
  params_ = std::move(params);
}

MlpOutput Mlp::forward(std::span<const double> x, int action, Tape* tape) const {
  if (x.size() != spec_.input_size) throw ConfigError("network input has the wrong length");
  if (action < 0 || action >= spec_.num_actions) throw IndexError("action out of range");
  Eigen::VectorXd a(static_cast<Eigen::Index>(layers_.front().in));
  a.head(static_cast<Eigen::Index>(x.size())) = CVec(x.data(), static_cast<Eigen::Index>(x.size()));
  if (spec_.action_input == ActionInput::Concat) {
    a.tail(spec_.num_actions).setZero();
    a(static_cast<Eigen::Index>(x.size()) + action) = 1.0;
  }
  if (tape) {
    tape->inputs.resize(layers_.size());
    tape->pre.resize(layers_.size());
    tape->action = action;
  }
  const std::size_t L = layers_.size();
  for (std::size_t i = 0; i < L; ++i) {
    const auto& l = layers_[i];
    const auto in = static_cast<Eigen::Index>(l.in), out = static_cast<Eigen::Index>(l.out);
    Eigen::VectorXd z = CMat(params_.data() + l.w, out, in) * a + CVec(params_.data() + l.b, out);
    if (tape) {
      tape->inputs[i].assign(a.data(), a.data() + in);
      tape->pre[i].assign(z.data(), z.data() + out);
    }
    if (i + 1 == L) {
      MlpOutput o;
      o.y.assign(z.data(), z.data() + out);
      if (spec_.reward_head) {
        const auto H = static_cast<Eigen::Index>(spec_.hidden.back());
        o.reward = CVec(params_.data() + reward_offset_, H).dot(a) + params_[reward_offset_ + spec_.hidden.back()];
      }
      return o;
    }
    a = z.unaryExpr(&leaky);
    if (i == 0 && spec_.action_input == ActionInput::Gate) {
      if (tape) tape->gate_act.assign(a.data(), a.data() + out);
      a.array() *= CVec(params_.data() + gate_offset_ + static_cast<std::size_t>(action) * l.out, out).array();
    }
  }
  return {};
}

void Mlp::backward(const Tape& tape, std::span<const double> dy, double dreward, std::span<double> grad,
                   std::span<double> dx) const {
  if (grad.size() != params_.size()) throw ConfigError("gradient buffer has the wrong length");
  const std::size_t L = layers_.size();
  Eigen::VectorXd delta = CVec(dy.data(), static_cast<Eigen::Index>(dy.size()));
  Eigen::VectorXd da;
  for (std::size_t i = L; i-- > 0;) {
    const auto& l = layers_[i];
    const auto in = static_cast<Eigen::Index>(l.in), out = static_cast<Eigen::Index>(l.out);
    const CVec a(tape.inputs[i].data(), in);
    if (i + 1 < L) {
      // delta currently holds dL/d(activation out of layer i).
      if (i == 0 && spec_.action_input == ActionInput::Gate) {
        const std::size_t g = gate_offset_ + static_cast<std::size_t>(tape.action) * l.out;
        const CVec act(tape.gate_act.data(), out);
        Vec(grad.data() + g, out) += delta.cwiseProduct(act);
        delta = delta.cwiseProduct(CVec(params_.data() + g, out));
      }
      for (Eigen::Index k = 0; k < out; ++k) delta(k) *= leaky_grad(tape.pre[i][static_cast<std::size_t>(k)]);
    }
    Mat(grad.data() + l.w, out, in) += delta * a.transpose();
    Vec(grad.data() + l.b, out) += delta;
    da = CMat(params_.data() + l.w, out, in).transpose() * delta;
    if (i + 1 == L && spec_.reward_head && dreward != 0.0) {
      const auto H = static_cast<Eigen::Index>(spec_.hidden.back());
      Vec(grad.data() + reward_offset_, H) += dreward * a;
      grad[reward_offset_ + spec_.hidden.back()] += dreward;
      da += dreward * CVec(params_.data() + reward_offset_, H);
    }
    delta = std::move(da);
  }
  if (!dx.empty()) {
    if (dx.size() != spec_.input_size) throw ConfigError("input-gradient buffer has the wrong length");
    for (std::size_t k = 0; k < dx.size(); ++k) dx[k] = delta(static_cast<Eigen::Index>(k));
  }
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw ConfigError("optimizer size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace ne3::nn

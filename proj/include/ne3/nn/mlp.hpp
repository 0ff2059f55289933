#pragma once

// Small fully connected networks with hand-written backpropagation.
//
// Hidden layers use a leaky rectifier (slope 0.01). The action enters either
// as a one-hot block appended to the input (Concat) or as a learned per-action
// vector multiplied into the first hidden layer (Gate). An optional scalar
// reward head reads the last hidden layer.

#include <cstddef>
#include <span>
#include <vector>

#include "ne3/rng.hpp"

namespace ne3::nn {

enum class ActionInput { None, Concat, Gate };

inline constexpr double kLeakySlope = 0.01;

struct MlpSpec {
  std::size_t input_size = 0;
  int num_actions = 1;
  std::vector<std::size_t> hidden;
  std::size_t output_size = 0;
  bool reward_head = false;
  ActionInput action_input = ActionInput::None;

  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

struct MlpOutput {
  std::vector<double> y;
  double reward = 0.0;
};

/// Activations kept by forward() for backward().
struct Tape {
  std::vector<std::vector<double>> inputs;  // input to each dense layer
  std::vector<std::vector<double>> pre;     // pre-activation of each dense layer
  std::vector<double> gate_act;             // first hidden activation before gating
  int action = 0;
};

class Mlp {
 public:
  Mlp() = default;
  /// Weights uniform in +-1/sqrt(fan_in), biases zero, gate vectors in [0.5, 1.5].
  Mlp(MlpSpec spec, Rng& rng);
  /// Takes parameters as given; throws ConfigError on a size mismatch.
  Mlp(MlpSpec spec, std::vector<double> params);

  const MlpSpec& spec() const noexcept { return spec_; }
  std::size_t param_count() const noexcept { return params_.size(); }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  /// Throws ConfigError when x has the wrong length or the action is out of range.
  MlpOutput forward(std::span<const double> x, int action, Tape* tape = nullptr) const;

  /// Accumulates dL/dparams into `grad` (length param_count) given dL/dy and
  /// dL/dreward; writes dL/dx into `dx` when it is non-empty.
  void backward(const Tape& tape, std::span<const double> dy, double dreward, std::span<double> grad,
                std::span<double> dx = {}) const;

 private:
  struct Layer {
    std::size_t in = 0, out = 0, w = 0, b = 0;  // sizes and offsets into params_
  };
  void layout();

  MlpSpec spec_;
  std::vector<Layer> layers_;
  std::size_t gate_offset_ = 0;
  std::size_t reward_offset_ = 0;
  std::vector<double> params_;
};

/// Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t size, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const noexcept { return t_; }
  double learning_rate() const noexcept { return lr_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace ne3::nn

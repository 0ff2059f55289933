#pragma once

// Dynamics-model interfaces consumed by the planners. Ground-truth simulators
// and trained networks both implement them, so a planner cannot tell a
// perfect-model ensemble from a learned one.

#include <cstddef>
#include <span>
#include <vector>

#include "ne3/rng.hpp"

namespace ne3 {

using State = std::vector<double>;

struct Prediction {
  State next_state;
  double reward = 0.0;
};

class DeterministicModel {
 public:
  virtual ~DeterministicModel() = default;
  virtual std::size_t state_size() const = 0;
  virtual int num_actions() const = 0;
  virtual Prediction predict(std::span<const double> state, int action) const = 0;
};

/// Row-major batch of equally sized state vectors.
class StateBatch {
 public:
  StateBatch() = default;
  StateBatch(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  /// `rows` copies of `state`.
  static StateBatch replicate(std::span<const double> state, std::size_t rows) {
    StateBatch b(rows, state.size());
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(state.begin(), state.end(), b.data_.begin() + static_cast<std::ptrdiff_t>(r * b.cols_));
    return b;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

class StochasticModel {
 public:
  virtual ~StochasticModel() = default;
  virtual std::size_t state_size() const = 0;
  virtual int num_actions() const = 0;
  /// Replaces every row of `states` with one sampled successor under
  /// `action` and writes that transition's reward to rewards[row].
  virtual void sample_batch(StateBatch& states, int action, std::span<double> rewards,
                            Rng& rng) const = 0;
};

}  // namespace ne3

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ne3/errors.hpp"
#include "ne3/rng.hpp"

namespace ne3 {

template <class Step>
struct Trajectory {
  std::vector<Step> steps;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return steps.size(); }
  bool empty() const noexcept { return steps.empty(); }
};

/// Location of one transition inside a ReplayBuffer.
struct TransitionRef {
  std::size_t epoch = 0;  // position in epochs(), not the epoch index
  std::size_t trajectory = 0;
  std::size_t step = 0;
};

/// Experience grouped by exploration epoch.
///
/// Sampling favours the most recent epoch: with two or more epochs stored, a
/// draw comes from the last epoch with probability `recent_fraction` (0.5) and
/// otherwise uniformly from the trajectories of all earlier epochs. Not
/// thread-safe; one writer per run.
template <class Step>
class ReplayBuffer {
 public:
  struct Epoch {
    std::size_t index = 0;
    std::vector<Trajectory<Step>> trajectories;
    std::size_t transitions = 0;
  };

  explicit ReplayBuffer(std::optional<std::size_t> capacity = std::nullopt,
                        double recent_fraction = 0.5)
      : capacity_(capacity), recent_fraction_(recent_fraction) {}

  /// Appends to the epoch `epoch_index` (which must not precede the last one).
  void push(std::size_t epoch_index, std::vector<Trajectory<Step>> trajectories) {
    if (!epochs_.empty() && epoch_index < epochs_.back().index) {
      throw ConfigError("replay buffer epochs must be pushed in nondecreasing order");
    }
    if (epochs_.empty() || epoch_index != epochs_.back().index) {
      epochs_.push_back(Epoch{epoch_index, {}, 0});
    }
    auto& epoch = epochs_.back();
    for (auto& t : trajectories) {
      epoch.transitions += t.size();
      total_ += t.size();
      epoch.trajectories.push_back(std::move(t));
    }
    evict();
  }

  void push(std::size_t epoch_index, Trajectory<Step> trajectory) {
    std::vector<Trajectory<Step>> batch;
    batch.push_back(std::move(trajectory));
    push(epoch_index, std::move(batch));
  }

  const std::vector<Epoch>& epochs() const noexcept { return epochs_; }
  std::size_t num_transitions() const noexcept { return total_; }
  std::size_t num_trajectories() const noexcept {
    std::size_t n = 0;
    for (const auto& e : epochs_) n += e.trajectories.size();
    return n;
  }
  bool empty() const noexcept { return total_ == 0; }

  const Step& at(const TransitionRef& ref) const {
    return epochs_[ref.epoch].trajectories[ref.trajectory].steps[ref.step];
  }
  const Trajectory<Step>& trajectory(const TransitionRef& ref) const {
    return epochs_[ref.epoch].trajectories[ref.trajectory];
  }

  /// Immutable index over eligible trajectories. Only trajectories with at
  /// least `min_length` steps are eligible, and the start step is chosen so
  /// that `min_length` steps remain (K-step segments). Safe to share between
  /// threads as long as the buffer is not modified.
  class Sampler {
   public:
    Sampler(const ReplayBuffer& buffer, std::size_t min_length)
        : buffer_(&buffer), min_length_(min_length) {
      if (buffer.total_ == 0) throw EmptyBufferError("cannot sample from an empty replay buffer");
      const std::size_t last = buffer.epochs_.size() - 1;
      for (std::size_t e = 0; e < buffer.epochs_.size(); ++e) {
        const auto& trajs = buffer.epochs_[e].trajectories;
        for (std::size_t t = 0; t < trajs.size(); ++t) {
          if (trajs[t].size() < min_length) continue;
          (e == last ? recent_ : earlier_).push_back({e, t});
        }
      }
      if (recent_.empty() && earlier_.empty()) {
        throw InsufficientDataError("no trajectory long enough for the requested segment");
      }
    }

    TransitionRef sample(Rng& rng) const {
      const bool single = buffer_->epochs_.size() == 1;
      bool recent = single || rng.uniform() < buffer_->recent_fraction_;
      if (recent && recent_.empty()) recent = false;
      if (!recent && earlier_.empty()) recent = true;
      const auto& pool = recent ? recent_ : earlier_;
      const auto [e, t] = pool[rng.uniform_int(pool.size())];
      const auto& traj = buffer_->epochs_[e].trajectories[t];
      return TransitionRef{e, t, rng.uniform_int(traj.size() - min_length_ + 1)};
    }

   private:
    const ReplayBuffer* buffer_;
    std::size_t min_length_;
    std::vector<std::pair<std::size_t, std::size_t>> recent_;
    std::vector<std::pair<std::size_t, std::size_t>> earlier_;
  };

  Sampler sampler(std::size_t min_length = 1) const { return Sampler(*this, min_length); }

  TransitionRef sample_ref(Rng& rng, std::size_t min_length = 1) const {
    return sampler(min_length).sample(rng);
  }

  std::vector<Step> sample_prioritized(std::size_t batch_size, Rng& rng) const {
    std::vector<Step> batch;
    batch.reserve(batch_size);
    const Sampler draw = sampler(1);
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(at(draw.sample(rng)));
    return batch;
  }

  /// All stored transitions in insertion order.
  std::vector<Step> all_transitions() const {
    std::vector<Step> out;
    out.reserve(total_);
    for (const auto& e : epochs_)
      for (const auto& t : e.trajectories)
        for (const auto& s : t.steps) out.push_back(s);
    return out;
  }

 private:
  void evict() {
    if (!capacity_) return;
    while (epochs_.size() > 1 && total_ > *capacity_) {
      total_ -= epochs_.front().transitions;
      epochs_.erase(epochs_.begin());
    }
  }

  std::optional<std::size_t> capacity_;
  double recent_fraction_;
  std::vector<Epoch> epochs_;
  std::size_t total_ = 0;
};

}  // namespace ne3

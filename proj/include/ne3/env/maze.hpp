#pragma once

// Procedurally generated grid mazes with one agent and one goal.

#include <cstdint>
#include <string>
#include <vector>

#include "ne3/env/environment.hpp"
#include "ne3/models.hpp"

namespace ne3::env {

struct MazeConfig {
  int size = 5;
  int time_limit = 100;
  void validate() const;
};

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

enum MazeAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kMazeActions = 4;

inline constexpr double kMazeGoalReward = 2.0;
inline constexpr double kMazeWallReward = -0.5;
inline constexpr double kMazeStepReward = -0.2;

struct MazeState {
  int size = 0;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  Cell agent;
  Cell goal;
  int steps_elapsed = 0;
  bool done = false;

  bool wall(int r, int c) const { return walls[static_cast<std::size_t>(r * size + c)] != 0; }
};

/// Randomized depth-first carving over odd cells, so the maze is a spanning
/// tree of corridors (border cells stay walls). Agent and goal land on
/// distinct open cells.
MazeState maze_generate(const MazeConfig& config, std::uint64_t episode_seed);

struct MazeStepResult {
  MazeState state;
  double reward = 0.0;
};

/// 4-connected move. Throws EpisodeOverError after the goal or the time limit.
MazeStepResult maze_step(const MazeState& state, int action, int time_limit);

/// Three stacked size*size binary grids: walls, agent, goal.
Observation maze_observe(const MazeState& state);

/// '#' wall, '.' open, 'A' agent, 'G' goal; one line per row.
std::string maze_ascii(const MazeState& state);

class MazeEnv : public Environment {
 public:
  explicit MazeEnv(MazeConfig config);

  int num_actions() const override { return kMazeActions; }
  int horizon() const override { return config_.time_limit; }
  std::size_t observation_size() const override;
  /// Draws a fresh maze seed from `rng`.
  Observation reset(Rng& rng) override;
  StepResult step(int action, Rng& rng) override;
  bool done() const override { return state_.done; }
  int steps_elapsed() const override { return state_.steps_elapsed; }

  const MazeState& state() const noexcept { return state_; }
  std::uint64_t episode_seed() const noexcept { return episode_seed_; }

 private:
  MazeConfig config_;
  MazeState state_;
  std::uint64_t episode_seed_ = 0;
};

/// Exact dynamics read off the observation channels. Once the agent sits on
/// the goal the state is absorbing with reward 0.
class MazeTrueModel : public DeterministicModel {
 public:
  explicit MazeTrueModel(int size) : size_(size) {}
  std::size_t state_size() const override { return static_cast<std::size_t>(3 * size_ * size_); }
  int num_actions() const override { return kMazeActions; }
  Prediction predict(std::span<const double> state, int action) const override;

 private:
  int size_;
};

}  // namespace ne3::env

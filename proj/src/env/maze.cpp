#include "ne3/env/maze.hpp"

#include <algorithm>
#include <array>

#include "ne3/errors.hpp"
#include "ne3/rng.hpp"

namespace ne3::env {

namespace {

constexpr std::array<int, 4> kDr{-1, 1, 0, 0};
constexpr std::array<int, 4> kDc{0, 0, -1, 1};

std::size_t cell_index(int size, Cell c) { return static_cast<std::size_t>(c.row * size + c.col); }

// Position of the largest entry in one size*size channel.
Cell argmax_cell(std::span<const double> channel, int size) {
  const auto it = std::max_element(channel.begin(), channel.end());
  const int i = static_cast<int>(it - channel.begin());
  return Cell{i / size, i % size};
}

}  // namespace

void MazeConfig::validate() const {
  if (size < 5) throw ConfigError("maze size must be at least 5");
  if (time_limit < 1) throw ConfigError("maze time_limit must be positive");
}

MazeState maze_generate(const MazeConfig& config, std::uint64_t episode_seed) {
  config.validate();
  Rng rng(episode_seed);
  const int n = config.size;
  MazeState m;
  m.size = n;
  m.walls.assign(static_cast<std::size_t>(n * n), 1);

  // Rooms are the odd cells strictly inside the border.
  const int rooms = (n - 1) / 2;
  auto open = [&](int r, int c) { m.walls[static_cast<std::size_t>(r * n + c)] = 0; };
  std::vector<Cell> stack;
  std::vector<char> seen(static_cast<std::size_t>(rooms * rooms), 0);
  Cell start{2 * rng.uniform_index(static_cast<std::size_t>(rooms)) + 1,
             2 * rng.uniform_index(static_cast<std::size_t>(rooms)) + 1};
  open(start.row, start.col);
  seen[static_cast<std::size_t>((start.row / 2) * rooms + start.col / 2)] = 1;
  stack.push_back(start);
  while (!stack.empty()) {
    const Cell cur = stack.back();
    std::array<int, 4> dirs{0, 1, 2, 3};
    rng.shuffle(dirs.begin(), dirs.end());
    bool moved = false;
    for (int d : dirs) {
      const int r = cur.row + 2 * kDr[static_cast<std::size_t>(d)];
      const int c = cur.col + 2 * kDc[static_cast<std::size_t>(d)];
      if (r < 1 || c < 1 || r > 2 * rooms - 1 || c > 2 * rooms - 1) continue;
      auto& s = seen[static_cast<std::size_t>((r / 2) * rooms + c / 2)];
      if (s) continue;
      s = 1;
      open(cur.row + kDr[static_cast<std::size_t>(d)], cur.col + kDc[static_cast<std::size_t>(d)]);
      open(r, c);
      stack.push_back(Cell{r, c});
      moved = true;
      break;
    }
    if (!moved) stack.pop_back();
  }

  std::vector<Cell> free;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (!m.wall(r, c)) free.push_back(Cell{r, c});
  const auto a = static_cast<std::size_t>(rng.uniform_index(free.size()));
  auto g = static_cast<std::size_t>(rng.uniform_index(free.size() - 1));
  if (g >= a) ++g;
  m.agent = free[a];
  m.goal = free[g];
  return m;
}

MazeStepResult maze_step(const MazeState& state, int action, int time_limit) {
  if (state.done || state.steps_elapsed >= time_limit) throw EpisodeOverError("maze episode is over");
  if (action < 0 || action >= kMazeActions) throw IndexError("maze action out of range");
  MazeStepResult out{state, 0.0};
  const Cell to{state.agent.row + kDr[static_cast<std::size_t>(action)],
                state.agent.col + kDc[static_cast<std::size_t>(action)]};
  const bool blocked = to.row < 0 || to.col < 0 || to.row >= state.size || to.col >= state.size ||
                       state.wall(to.row, to.col);
  if (blocked) {
    out.reward = kMazeWallReward;
  } else {
    out.state.agent = to;
    if (to == state.goal) {
      out.reward = kMazeGoalReward;
      out.state.done = true;
    } else {
      out.reward = kMazeStepReward;
    }
  }
  ++out.state.steps_elapsed;
  if (out.state.steps_elapsed >= time_limit) out.state.done = true;
  return out;
}

Observation maze_observe(const MazeState& state) {
  const auto cells = static_cast<std::size_t>(state.size * state.size);
  Observation obs(3 * cells, 0.0);
  for (std::size_t i = 0; i < cells; ++i) obs[i] = state.walls[i] ? 1.0 : 0.0;
  obs[cells + cell_index(state.size, state.agent)] = 1.0;
  obs[2 * cells + cell_index(state.size, state.goal)] = 1.0;
  return obs;
}

std::string maze_ascii(const MazeState& state) {
  std::string out;
  for (int r = 0; r < state.size; ++r) {
    for (int c = 0; c < state.size; ++c) {
      const Cell here{r, c};
      if (here == state.agent) out += 'A';
      else if (here == state.goal) out += 'G';
      else out += state.wall(r, c) ? '#' : '.';
    }
    out += '\n';
  }
  return out;
}

MazeEnv::MazeEnv(MazeConfig config) : config_(config) {
  config_.validate();
  state_.done = true;
}

std::size_t MazeEnv::observation_size() const {
  return static_cast<std::size_t>(3 * config_.size * config_.size);
}

Observation MazeEnv::reset(Rng& rng) {
  episode_seed_ = rng.next_u64();
  state_ = maze_generate(config_, episode_seed_);
  return maze_observe(state_);
}

StepResult MazeEnv::step(int action, Rng&) {
  auto r = maze_step(state_, action, config_.time_limit);
  state_ = std::move(r.state);
  return StepResult{maze_observe(state_), r.reward, state_.done};
}

Prediction MazeTrueModel::predict(std::span<const double> state, int action) const {
  if (state.size() != state_size()) throw IndexError("maze state has the wrong length");
  if (action < 0 || action >= kMazeActions) throw IndexError("maze action out of range");
  const auto cells = static_cast<std::size_t>(size_ * size_);
  const auto walls = state.subspan(0, cells);
  const Cell agent = argmax_cell(state.subspan(cells, cells), size_);
  const Cell goal = argmax_cell(state.subspan(2 * cells, cells), size_);

  Prediction out{State(state.begin(), state.end()), 0.0};
  if (agent == goal) return out;

  const Cell to{agent.row + kDr[static_cast<std::size_t>(action)],
                agent.col + kDc[static_cast<std::size_t>(action)]};
  if (to.row < 0 || to.col < 0 || to.row >= size_ || to.col >= size_ || walls[cell_index(size_, to)] > 0.5) {
    out.reward = kMazeWallReward;
    return out;
  }
  out.next_state[cells + cell_index(size_, agent)] = 0.0;
  out.next_state[cells + cell_index(size_, to)] = 1.0;
  out.reward = to == goal ? kMazeGoalReward : kMazeStepReward;
  return out;
}

}  // namespace ne3::env

#include <algorithm>
#include <limits>
#include <queue>

#include "ne3/errors.hpp"
#include "ne3/kernels.hpp"
#include "ne3/planners.hpp"

namespace ne3::planners {

namespace {

struct Node {
  std::vector<double> states;  // E x m, row per member
  double utility = 0.0;
  int parent = -1;
  int action = -1;
  int depth = 0;
};

struct QueueEntry {
  double priority;
  std::size_t id;
  // Max-heap on priority, then earliest insertion.
  bool operator<(const QueueEntry& o) const {
    if (priority != o.priority) return priority < o.priority;
    return id > o.id;
  }
};

}  // namespace

DeterministicPlan deterministic_plan(std::span<const double> start, std::span<const DeterministicModel* const> ensemble,
                                     std::size_t max_nodes, PlannerMode mode) {
  if (ensemble.empty()) throw ConfigError("deterministic planner needs at least one model");
  const std::size_t E = ensemble.size();
  const std::size_t m = start.size();
  const int A = ensemble.front()->num_actions();
  for (const auto* model : ensemble) {
    if (model->state_size() != m || model->num_actions() != A) throw ConfigError("ensemble members disagree in shape");
  }

  std::vector<Node> nodes;
  std::vector<double> means;  // row per node, fed to the nearest-distance kernel
  std::priority_queue<QueueEntry> queue;

  Node root;
  for (std::size_t e = 0; e < E; ++e) root.states.insert(root.states.end(), start.begin(), start.end());
  nodes.push_back(std::move(root));
  means.insert(means.end(), start.begin(), start.end());
  queue.push({std::numeric_limits<double>::infinity(), 0});

  DeterministicPlan plan;
  std::vector<Prediction> preds(E);
  std::vector<double> mean(m);
  while (nodes.size() < max_nodes && !queue.empty()) {
    const std::size_t id = queue.top().id;
    queue.pop();  // popping is the -inf priority mark
    ++plan.expansions;
    for (int a = 0; a < A && nodes.size() < max_nodes; ++a) {
      const Node& v = nodes[id];
      for (std::size_t e = 0; e < E; ++e) {
        preds[e] = ensemble[e]->predict(std::span<const double>(v.states.data() + e * m, m), a);
      }
      double u = 0.0;
      if (mode == PlannerMode::Explore) {
        for (std::size_t i = 0; i < E; ++i) {
          for (std::size_t j = i + 1; j < E; ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
              const double x = preds[i].next_state[k] - preds[j].next_state[k];
              d += x * x;
            }
            u = std::max(u, d);
          }
        }
      } else {
        for (const auto& p : preds) u += p.reward;
        u /= static_cast<double>(E);
      }
      Node child;
      child.parent = static_cast<int>(id);
      child.action = a;
      child.depth = v.depth + 1;
      child.utility = v.utility + u;
      std::fill(mean.begin(), mean.end(), 0.0);
      for (const auto& p : preds) {
        child.states.insert(child.states.end(), p.next_state.begin(), p.next_state.end());
        for (std::size_t k = 0; k < m; ++k) mean[k] += p.next_state[k];
      }
      for (auto& x : mean) x /= static_cast<double>(E);
      const double priority = kernels::nearest_distance(means, m, mean);
      means.insert(means.end(), mean.begin(), mean.end());
      queue.push({priority, nodes.size()});
      nodes.push_back(std::move(child));
    }
  }
  plan.graph_size = nodes.size();
  if (nodes.size() == 1) return plan;

  std::size_t best = 1;
  double best_rate = nodes[1].utility / nodes[1].depth;
  for (std::size_t i = 2; i < nodes.size(); ++i) {
    const double rate = nodes[i].utility / nodes[i].depth;
    if (rate > best_rate) {
      best_rate = rate;
      best = i;
    }
  }
  plan.utility_rate = best_rate;
  for (int i = static_cast<int>(best); nodes[static_cast<std::size_t>(i)].parent >= 0;
       i = nodes[static_cast<std::size_t>(i)].parent) {
    plan.actions.push_back(nodes[static_cast<std::size_t>(i)].action);
  }
  std::reverse(plan.actions.begin(), plan.actions.end());
  return plan;
}

}  // namespace ne3::planners

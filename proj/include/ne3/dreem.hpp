#pragma once

// Version-space elimination over an explicit model class, driven by the
// policy whose predicted model disagreement is largest.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ne3/mdp.hpp"
#include "ne3/misfit.hpp"
#include "ne3/rng.hpp"

namespace ne3::dreem {

enum class DataScheme {
  /// n fresh episodes for every step h, each ending in a uniform action at h.
  PerStep,
  /// n episodes in total; each picks its step h uniformly.
  UniformStep,
};

struct DreemConfig {
  double epsilon = 0.5;
  double phi = 0.01;
  std::size_t n = 100;
  double delta = 0.1;
  std::optional<int> d_override;
  double sample_scale = 1.0;
  bool oracle_misfit = true;
  DataScheme scheme = DataScheme::PerStep;
  /// Rounds after which the run stops and reports an anomaly; 0 disables.
  std::size_t round_cap = 0;

  void validate() const;
};

struct RoundRecord {
  std::size_t explore_policy = 0;
  double v_explore = 0.0;
  /// misfits[k][h-1] for the k-th model surviving at the start of the round.
  std::vector<std::size_t> candidates;
  std::vector<std::vector<double>> misfits;
  std::vector<std::size_t> eliminated;
};

struct VersionSpace {
  std::vector<std::size_t> surviving;  // indices into the model class, ascending
  std::vector<RoundRecord> history;

  static VersionSpace full(std::size_t size);
  std::vector<const TabularMDP*> members(const ModelClass& models) const;
};

struct DreemResult {
  Policy exploit_policy = Policy::open_loop({});
  std::size_t exploit_index = 0;  // position in the policy class
  std::size_t chosen_model = 0;   // the surviving model planned against
  std::size_t rounds = 0;
  std::size_t trajectories_used = 0;  // rounds * n
  std::size_t episodes_used = 0;      // episodes actually simulated
  std::size_t final_versionspace_size = 0;
  /// Exact value of the best policy in the class minus the returned policy's,
  /// on the truth's rewards. Set whenever the truth is known.
  std::optional<double> value_gap;
  /// The round cap was hit before the explore test came back negative.
  bool anomaly = false;
  VersionSpace version_space;
};

/// Removes every model whose misfit under `policy` exceeds phi at some h.
/// Oracle mode uses exact misfits against `truth`; otherwise it simulates
/// episodes on `truth` and scores models with the truth-free pairwise
/// test functions of `models`. Returns the number of episodes simulated.
std::size_t update_model_set(VersionSpace& vs, const ModelClass& models, std::span<const Policy> policies,
                             std::size_t policy_index, double v_explore, const TabularMDP& truth,
                             const DreemConfig& config, std::span<const TestFunction> test_functions, Rng& rng);

/// Explore while max_pi v_explore(pi, M_t) > epsilon / |A|, then return the
/// best policy of the class under the lowest-index surviving model. `truth`
/// is the environment; its rewards serve as R* for every model. Throws
/// EliminationFailureError if the version space empties.
DreemResult dreem_run(const ModelClass& models, std::span<const Policy> policies, const TabularMDP& truth,
                      const DreemConfig& config, Rng& rng);

struct TheoreticalParameters {
  double phi = 0.0;
  double n = 0.0;  // ceil'd; kept as double because it overflows integers quickly
  double T = 0.0;
};

/// phi = eps / (24 H^2 |A|^2 sqrt(d)),
/// T = H d log(beta / (2 phi)) / log(5/3),
/// n = ceil(36864 H^4 |A|^4 d log(4 T H |M| |Pi| / delta) / eps^2).
/// Throws ConfigError for nonpositive arguments or beta <= 2 phi.
TheoreticalParameters theoretical_parameters(int num_actions, int horizon, double epsilon, double delta, double d,
                                             double beta, std::size_t model_count, std::size_t policy_count);

struct DoublingResult {
  DreemResult result;
  int outer_iterations = 0;
  std::vector<TheoreticalParameters> schedule;  // parameters tried, in order
};

/// Guesses d = 2, 4, 8, ... with delta_i = delta / (i (i + 1)), capping each
/// attempt at T_i rounds. Returns the first attempt that finishes under its
/// cap. `base` supplies the mode, scheme and sample_scale. Throws
/// ConvergenceError after max_outer attempts.
DoublingResult doubling_run(const ModelClass& models, std::span<const Policy> policies, const TabularMDP& truth,
                            double epsilon, double delta, double beta, const DreemConfig& base, Rng& rng,
                            int max_outer = 12);

/// max_h of the factorization certificate max|u_i| max|v_j| of A_h, with the
/// rank taken numerically. Used as beta in the parameter formulas.
double estimate_beta(std::span<const Policy> policies, const ModelClass& models, const TabularMDP& truth);

/// max_h numerical_rank(A_h).
int effective_rank(std::span<const Policy> policies, const ModelClass& models, const TabularMDP& truth);

/// `count` perturbations of `truth` plus the truth itself at a random
/// position. Each perturbation mixes between 1 and `max_rows` random rows
/// toward a random distribution with weight in [min_weight, 1].
ModelClass perturbed_class(const TabularMDP& truth, std::size_t count, Rng& rng, int max_rows = 3,
                           double min_weight = 0.05);

}  // namespace ne3::dreem

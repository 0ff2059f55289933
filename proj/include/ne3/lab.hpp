#pragma once

// Randomized property checks over tabular model classes. The CLI's
// misfit-lab report and the acceptance binary both run these.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ne3/mdp.hpp"
#include "ne3/misfit.hpp"
#include "ne3/rng.hpp"

namespace ne3::lab {

/// Random rows (some entries zeroed, at least one kept), uniform rewards in
/// [0, 1], random initial distribution.
TabularMDP random_mdp(int num_states, int num_actions, int horizon, Rng& rng, double sparsity = 0.3);

/// Mixes every transition row toward a fresh random distribution with weight eps.
TabularMDP mix_toward_random(const TabularMDP& m, double eps, Rng& rng);

struct DisagreementReport {
  int instances = 0;
  int triggered = 0;  // (pi, h, alpha) cases with D > alpha
  int violations = 0;
};

/// Instances with |S| <= 5, |A| <= 3, H <= 4 and two mixtures of the truth.
/// For each h an alpha is drawn below D(pi, M, M', h) and some h' <= h must
/// have max(W(pi,M,h'), W(pi,M',h')) > alpha / (4 |A| H).
DisagreementReport disagreement_check(int instances, Rng& rng);

struct IpmReport {
  int instances = 0;
  int comparisons = 0;
  double max_error = 0.0;  // |IPM value - exact misfit|, worst case
};

/// IPM objective at the sign maximizer, and the max over the built
/// test-function class, both against misfit_exact.
IpmReport ipm_equality_check(int instances, Rng& rng);

struct ConcentrationReport {
  int instances = 0;
  int repetitions = 0;  // per instance
  double bound = 0.0;   // of the last instance
  double worst_rate = 0.0;  // largest per-instance fraction of (repetition, model) exceedances
};

ConcentrationReport concentration_check(int instances, int repetitions, std::size_t n, double delta, Rng& rng);

struct RankReport {
  int classes = 0;
  int violations = 0;
  int max_rank = 0;
};

/// Random classes over random truths: rank(A_h) <= |S|.
RankReport tabular_rank_check(int classes, Rng& rng, double tol = 1e-8);
/// Classes over rank-K truths, K cycling through 1..3: rank(A_h) <= K for h >= 2.
RankReport low_rank_check(int classes, Rng& rng, double tol = 1e-8);

struct SlabReport {
  int trials = 0;
  double max_ratio = 0.0;
  std::vector<double> ratios;
};

/// Random ellipsoids in d in {2, 3} cut by slabs that meet the 6 sqrt(d) phi trigger.
SlabReport slab_cut_check(int trials, Rng& rng);

struct LabConfig {
  int num_states = 4;
  int num_actions = 2;
  int horizon = 3;
  int models = 12;  // including the truth
  int disagreement_instances = 200;
  int slab_trials = 20;
  std::uint64_t seed = 0;
};

/// JSON report: per-h rank, singular values and beta certificate of a random
/// class, the disagreement-implies-misfit violation count and slab-cut volume ratios.
nlohmann::json misfit_lab_report(const LabConfig& config);

}  // namespace ne3::lab

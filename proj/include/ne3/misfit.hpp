#pragma once

// Misfit, disagreement, and the IPM machinery over tabular model classes.
//
// All distances are L1 (sum |p - q|, no factor 1/2), the scale of the IPM
// with test functions bounded by 1. Misfits therefore lie in [0, 2].
// Step h uses the roll-in law of s_{h-1} and a uniform action a_h.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ne3/mdp.hpp"
#include "ne3/rng.hpp"

namespace ne3 {

struct ModelClass {
  std::vector<TabularMDP> models;
  std::optional<std::size_t> truth_index;

  std::size_t size() const noexcept { return models.size(); }
  const TabularMDP& operator[](std::size_t i) const { return models[i]; }
  /// Shapes agree and truth_index is in range.
  void validate() const;
};

/// f(s, a, s') in {-1, 0, 1}, row-major like TabularMDP::transitions.
struct TestFunction {
  std::vector<double> values;
  std::size_t policy = 0;  // provenance (pi, M, h) and sign
  std::size_t model = 0;
  int h = 0;
  int sign = 1;
};

/// W(pi, M, h) = E_{s ~ P*^{pi,h-1}, a ~ U(A)} |P_M(.|s,a) - P*(.|s,a)|_1.
double misfit_exact(const TabularMDP& truth, const TabularMDP& model, const Policy& policy, int h);

/// Same quantity given the roll-in law of s_{h-1} directly.
double misfit_from_rollin(const TabularMDP& truth, const TabularMDP& model, std::span<const double> rollin);

/// sign(P_M - P*), the maximizer of the IPM objective for (M, truth).
std::vector<double> sign_table(const TabularMDP& model, const TabularMDP& reference);

/// Both signs of sign(P_M - P*) for every (pi, M, h): 2 |Pi| |M| H functions.
std::vector<TestFunction> build_test_functions(std::span<const Policy> policies,
                                               std::span<const TabularMDP> models, const TabularMDP& truth);

/// Truth-free variant: both signs of sign(P_M - P_M') for every ordered pair of
/// distinct models. Contains the truth-based class whenever the truth is a member.
std::vector<TestFunction> build_pairwise_test_functions(std::span<const TabularMDP> models);

/// Drops functions whose tables repeat an earlier one; the max over the class
/// is unchanged.
std::vector<TestFunction> unique_test_functions(std::vector<TestFunction> functions);

/// E_{s ~ P*^{pi,h-1}, a ~ U(A)} [ E_{s' ~ P_M} f - E_{s' ~ P*} f ].
double ipm_objective(const TabularMDP& truth, const TabularMDP& model, const Policy& policy, int h,
                     std::span<const double> f);

struct TransitionSample {
  int state = 0;
  int action = 0;
  int next_state = 0;
};

/// Counts n(s, a, s') of a step-h dataset.
class TransitionCounts {
 public:
  TransitionCounts(int num_states, int num_actions);
  void add(const TransitionSample& t);
  std::size_t total() const noexcept { return total_; }
  double count(int s, int a, int next) const { return counts_[index(s, a) + static_cast<std::size_t>(next)]; }
  double count(int s, int a) const { return row_totals_[static_cast<std::size_t>(s * num_actions_ + a)]; }
  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }

 private:
  std::size_t index(int s, int a) const noexcept {
    return static_cast<std::size_t>(s * num_actions_ + a) * static_cast<std::size_t>(num_states_);
  }
  int num_states_;
  int num_actions_;
  std::size_t total_ = 0;
  std::vector<double> counts_;
  std::vector<double> row_totals_;
};

/// n transitions at step h: roll in with `policy` for h-1 steps, then take a
/// uniform action. One episode per sample.
std::vector<TransitionSample> collect_misfit_dataset(const TabularMDP& truth, const Policy& policy, int h,
                                                     std::size_t n, Rng& rng);

/// max over the class of (1/n) sum_i [ E_{s' ~ P_M(.|s_i,a_i)} f - f(s_i, a_i, s'_i) ].
/// Throws InsufficientDataError on an empty dataset.
double misfit_empirical(std::span<const TransitionSample> dataset, const TabularMDP& model,
                        std::span<const TestFunction> test_functions);
double misfit_empirical(const TransitionCounts& counts, const TabularMDP& model,
                        std::span<const TestFunction> test_functions);

/// The deviation bound for |W~ - W| at confidence 1 - delta:
/// 4 L / (3n) + 4 sqrt(2 L / n) with L = log(2 |M| |Pi| H / delta).
double misfit_deviation_bound(std::size_t n, std::size_t model_count, std::size_t policy_count, int horizon,
                              double delta);

/// D(pi, M, M', h) = (1/|A|) sum_{s,a,s'} |P_M(s'|s,a) P_M^{pi,h-1}(s) - P_M'(s'|s,a) P_M'^{pi,h-1}(s)|.
double disagreement(const TabularMDP& a, const TabularMDP& b, const Policy& policy, int h);

/// D given each model's roll-in law of s_{h-1}.
double disagreement_from(const TabularMDP& a, std::span<const double> rollin_a, const TabularMDP& b,
                         std::span<const double> rollin_b);

/// max over model pairs of sum_h D(pi, M, M', h); 0 for fewer than two models.
double v_explore(const Policy& policy, std::span<const TabularMDP> models);
double v_explore(const Policy& policy, std::span<const TabularMDP* const> models);

struct MisfitMatrix {
  int h = 0;
  /// values(i, j) = W(pi_i, M_j, h).
  Eigen::MatrixXd values;
};

MisfitMatrix misfit_matrix(std::span<const Policy> policies, const ModelClass& models, const TabularMDP& truth,
                           int h);

}  // namespace ne3

#pragma once

#include <Eigen/Dense>

#include "ne3/mdp.hpp"
#include "ne3/rng.hpp"

namespace ne3 {

/// Transition matrix Gamma = gamma1 * gamma2 with Gamma(s', (s, a)) = P(s'|s, a).
/// Columns of both factors are probability vectors, so Gamma's are too.
struct LowRankTransition {
  Eigen::MatrixXd gamma1;  // |S| x K
  Eigen::MatrixXd gamma2;  // K x |S||A|
  int K = 0;

  Eigen::MatrixXd product() const { return gamma1 * gamma2; }
};

struct LowRankInstance {
  TabularMDP truth;
  LowRankTransition factors;
};

/// Random factors with Dirichlet(1) columns. The MDP starts in state 0 and
/// has uniform random rewards. Requires 1 <= K <= min(|S|, |S||A|).
LowRankInstance low_rank_mdp_synthesize(int num_states, int num_actions, int K, Rng& rng, int horizon = 3);

}  // namespace ne3

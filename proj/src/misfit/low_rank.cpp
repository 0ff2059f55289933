#include "ne3/low_rank.hpp"

#include <algorithm>
#include <cmath>

#include "ne3/errors.hpp"

namespace ne3 {

namespace {

void dirichlet_columns(Eigen::MatrixXd& m, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, j) = -std::log1p(-rng.uniform());
      total += m(i, j);
    }
    m.col(j) /= total;
  }
}

}  // namespace

LowRankInstance low_rank_mdp_synthesize(int num_states, int num_actions, int K, Rng& rng, int horizon) {
  if (num_states < 1 || num_actions < 1) throw ConfigError("low-rank MDP needs positive |S| and |A|");
  if (K < 1 || K > std::min(num_states, num_states * num_actions)) {
    throw ConfigError("K must lie in [1, min(|S|, |S||A|)]");
  }
  LowRankTransition f;
  f.K = K;
  f.gamma1.resize(num_states, K);
  f.gamma2.resize(K, num_states * num_actions);
  dirichlet_columns(f.gamma1, rng);
  dirichlet_columns(f.gamma2, rng);
  const Eigen::MatrixXd gamma = f.product();

  const auto S = static_cast<std::size_t>(num_states);
  std::vector<double> P(S * static_cast<std::size_t>(num_actions) * S);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      const Eigen::Index col = s * num_actions + a;
      double total = 0.0;
      for (int n = 0; n < num_states; ++n) total += gamma(n, col);
      // Renormalize away the last-ulp drift so the row passes validation.
      for (int n = 0; n < num_states; ++n) P[static_cast<std::size_t>(col) * S + static_cast<std::size_t>(n)] = gamma(n, col) / total;
    }
  }
  std::vector<double> R(S);
  for (auto& r : R) r = rng.uniform();
  return LowRankInstance{TabularMDP(num_states, num_actions, horizon, std::move(P), std::move(R), 0), std::move(f)};
}

}  // namespace ne3

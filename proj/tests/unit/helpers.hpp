#pragma once

// Shared fixtures and brute-force oracles for the unit tests.

#include <functional>
#include <vector>

#include "ne3/mdp.hpp"
#include "ne3/rng.hpp"

namespace testing {

/// Random MDP with Dirichlet-like rows; `sparsity` zeroes entries at random
/// (keeping at least one per row).
inline ne3::TabularMDP random_mdp(int S, int A, int H, ne3::Rng& rng, double sparsity = 0.3) {
  std::vector<double> P(static_cast<std::size_t>(S * A * S));
  for (int r = 0; r < S * A; ++r) {
    double total = 0.0;
    const int keep = rng.uniform_index(static_cast<std::size_t>(S));
    for (int n = 0; n < S; ++n) {
      double x = (n == keep || !rng.bernoulli(sparsity)) ? rng.uniform() + 1e-3 : 0.0;
      P[static_cast<std::size_t>(r * S + n)] = x;
      total += x;
    }
    for (int n = 0; n < S; ++n) P[static_cast<std::size_t>(r * S + n)] /= total;
  }
  std::vector<double> R(static_cast<std::size_t>(S));
  for (auto& x : R) x = rng.uniform();
  std::vector<double> init(static_cast<std::size_t>(S));
  double total = 0.0;
  for (auto& x : init) total += (x = rng.uniform());
  for (auto& x : init) x /= total;
  return ne3::TabularMDP(S, A, H, std::move(P), std::move(R), std::move(init));
}

/// Law of s_h by enumerating every path s_0 .. s_h with its probability.
inline std::vector<double> enumerate_distribution(const ne3::TabularMDP& m, const ne3::Policy& pi, int h) {
  std::vector<double> out(static_cast<std::size_t>(m.num_states()), 0.0);
  std::function<void(int, int, double)> walk = [&](int depth, int s, double prob) {
    if (prob == 0.0) return;
    if (depth == h) {
      out[static_cast<std::size_t>(s)] += prob;
      return;
    }
    const int a = pi.action(depth + 1, s);
    for (int n = 0; n < m.num_states(); ++n) walk(depth + 1, n, prob * m.p(s, a, n));
  };
  for (int s = 0; s < m.num_states(); ++s) walk(0, s, m.initial()[static_cast<std::size_t>(s)]);
  return out;
}

/// Expected return by path enumeration.
inline double enumerate_value(const ne3::TabularMDP& m, const ne3::Policy& pi) {
  double v = 0.0;
  std::function<void(int, int, double)> walk = [&](int depth, int s, double prob) {
    if (prob == 0.0 || depth == m.horizon()) return;
    const int a = pi.action(depth + 1, s);
    for (int n = 0; n < m.num_states(); ++n) {
      const double p = prob * m.p(s, a, n);
      v += p * m.reward(n);
      walk(depth + 1, n, p);
    }
  };
  for (int s = 0; s < m.num_states(); ++s) walk(0, s, m.initial()[static_cast<std::size_t>(s)]);
  return v;
}

}  // namespace testing

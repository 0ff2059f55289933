#include "ne3/lab.hpp"

#include <algorithm>
#include <cmath>

#include "ne3/ellipsoid.hpp"
#include "ne3/linalg.hpp"
#include "ne3/low_rank.hpp"

namespace ne3::lab {

TabularMDP random_mdp(int S, int A, int H, Rng& rng, double sparsity) {
  std::vector<double> P(static_cast<std::size_t>(S * A * S));
  for (int r = 0; r < S * A; ++r) {
    const int keep = rng.uniform_index(static_cast<std::size_t>(S));
    double total = 0.0;
    for (int n = 0; n < S; ++n) {
      const double x = (n == keep || !rng.bernoulli(sparsity)) ? rng.uniform() + 1e-3 : 0.0;
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
  return TabularMDP(S, A, H, std::move(P), std::move(R), std::move(init));
}

TabularMDP mix_toward_random(const TabularMDP& m, double eps, Rng& rng) {
  std::vector<double> P(m.transitions().begin(), m.transitions().end());
  const auto S = static_cast<std::size_t>(m.num_states());
  std::vector<double> q(S);
  for (std::size_t r = 0; r < P.size() / S; ++r) {
    double total = 0.0;
    for (auto& x : q) total += (x = rng.uniform());
    for (std::size_t n = 0; n < S; ++n) P[r * S + n] = (1 - eps) * P[r * S + n] + eps * q[n] / total;
  }
  return m.with_transitions(std::move(P));
}

namespace {

Policy random_open_loop(int A, int H, Rng& rng) {
  std::vector<int> seq(static_cast<std::size_t>(H));
  for (auto& a : seq) a = rng.uniform_index(static_cast<std::size_t>(A));
  return Policy::open_loop(std::move(seq));
}

}  // namespace

DisagreementReport disagreement_check(int instances, Rng& rng) {
  DisagreementReport out;
  out.instances = instances;
  for (int inst = 0; inst < instances; ++inst) {
    const int S = 2 + rng.uniform_index(4), A = 1 + rng.uniform_index(3), H = 1 + rng.uniform_index(4);
    const auto truth = random_mdp(S, A, H, rng);
    const auto m1 = mix_toward_random(truth, rng.uniform(), rng);
    const auto m2 = mix_toward_random(truth, rng.uniform(), rng);
    const auto pi = random_open_loop(A, H, rng);
    for (int h = 1; h <= H; ++h) {
      const double D = disagreement(m1, m2, pi, h);
      const double alpha = rng.uniform() * D;
      if (!(D > alpha)) continue;
      ++out.triggered;
      bool found = false;
      for (int k = 1; k <= h && !found; ++k)
        found = std::max(misfit_exact(truth, m1, pi, k), misfit_exact(truth, m2, pi, k)) > alpha / (4.0 * A * H);
      out.violations += !found;
    }
  }
  return out;
}

IpmReport ipm_equality_check(int instances, Rng& rng) {
  IpmReport out;
  out.instances = instances;
  for (int inst = 0; inst < instances; ++inst) {
    const int S = 2 + rng.uniform_index(4), A = 1 + rng.uniform_index(3), H = 1 + rng.uniform_index(3);
    const auto truth = random_mdp(S, A, H, rng);
    const std::vector<TabularMDP> models = {random_mdp(S, A, H, rng), mix_toward_random(truth, rng.uniform(), rng)};
    const std::vector<Policy> pis = {random_open_loop(A, H, rng)};
    const auto F = build_test_functions(pis, models, truth);
    for (const auto& m : models) {
      const auto sign = sign_table(m, truth);
      for (int h = 1; h <= H; ++h) {
        const double exact = misfit_exact(truth, m, pis[0], h);
        double best = -1.0;
        for (const auto& f : F) best = std::max(best, ipm_objective(truth, m, pis[0], h, f.values));
        const double at_sign = ipm_objective(truth, m, pis[0], h, sign);
        out.max_error = std::max({out.max_error, std::abs(at_sign - exact), std::abs(best - exact)});
        out.comparisons += 2;
      }
    }
  }
  return out;
}

ConcentrationReport concentration_check(int instances, int repetitions, std::size_t n, double delta, Rng& rng) {
  ConcentrationReport out;
  out.instances = instances;
  out.repetitions = repetitions;
  const int S = 3, A = 2, H = 2;
  for (int inst = 0; inst < instances; ++inst) {
    const auto truth = random_mdp(S, A, H, rng);
    const std::vector<TabularMDP> models = {truth, mix_toward_random(truth, 0.3, rng), random_mdp(S, A, H, rng)};
    const auto pis = all_open_loop_policies(A, H);
    const auto F = unique_test_functions(build_test_functions(pis, models, truth));
    out.bound = misfit_deviation_bound(n, models.size(), pis.size(), H, delta);
    int exceed = 0;
    for (int r = 0; r < repetitions; ++r) {
      const auto& pi = pis[static_cast<std::size_t>(r) % pis.size()];
      const int h = 1 + r % H;
      const auto data = collect_misfit_dataset(truth, pi, h, n, rng);
      for (const auto& m : models) exceed += std::abs(misfit_empirical(data, m, F) - misfit_exact(truth, m, pi, h)) > out.bound;
    }
    out.worst_rate = std::max(out.worst_rate, static_cast<double>(exceed) / (repetitions * static_cast<double>(models.size())));
  }
  return out;
}

RankReport tabular_rank_check(int classes, Rng& rng, double tol) {
  RankReport out;
  out.classes = classes;
  const auto pis = all_open_loop_policies(2, 3);
  for (int c = 0; c < classes; ++c) {
    const int S = 2 + rng.uniform_index(3);
    const auto truth = random_mdp(S, 2, 3, rng);
    ModelClass cls{{truth}, 0};
    for (int i = 0; i < 12; ++i) cls.models.push_back(random_mdp(S, 2, 3, rng));
    bool bad = false;
    for (int h = 1; h <= 3; ++h) {
      const int r = numerical_rank(misfit_matrix(pis, cls, truth, h).values, tol);
      out.max_rank = std::max(out.max_rank, r);
      bad = bad || r > S;
    }
    out.violations += bad;
  }
  return out;
}

RankReport low_rank_check(int classes, Rng& rng, double tol) {
  RankReport out;
  out.classes = classes;
  const auto pis = all_open_loop_policies(2, 3);
  for (int c = 0; c < classes; ++c) {
    const int K = 1 + c % 3;
    const auto inst = low_rank_mdp_synthesize(6, 2, K, rng);
    ModelClass cls{{inst.truth}, 0};
    for (int i = 0; i < 12; ++i) cls.models.push_back(mix_toward_random(inst.truth, rng.uniform(), rng));
    bool bad = false;
    // Step 1 rolls in from the initial state alone, which the factorization
    // does not constrain.
    for (int h = 2; h <= 3; ++h) {
      const int r = numerical_rank(misfit_matrix(pis, cls, inst.truth, h).values, tol);
      out.max_rank = std::max(out.max_rank, r);
      bad = bad || r > K;
    }
    out.violations += bad;
  }
  return out;
}

SlabReport slab_cut_check(int trials, Rng& rng) {
  SlabReport out;
  out.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const int d = 2 + t % 2;
    Eigen::MatrixXd B(d, d);
    for (auto& x : B.reshaped()) x = rng.uniform(-1, 1);
    const Ellipsoid o{B * B.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d)};
    Eigen::VectorXd p(d);
    for (auto& x : p) x = rng.uniform(-1, 1);
    const double width = o.support(p);
    const double phi = width / (6.0 * std::sqrt(static_cast<double>(d))) * rng.uniform(0.2, 0.95);
    const double ratio = volume_shrink_check(o, p, width, phi).ratio;
    out.ratios.push_back(ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
  }
  return out;
}

nlohmann::json misfit_lab_report(const LabConfig& config) {
  Rng rng(config.seed);
  const auto truth = random_mdp(config.num_states, config.num_actions, config.horizon, rng);
  ModelClass cls{{truth}, 0};
  for (int i = 1; i < config.models; ++i) cls.models.push_back(mix_toward_random(truth, rng.uniform(), rng));
  const auto pis = all_open_loop_policies(config.num_actions, config.horizon);

  nlohmann::json steps = nlohmann::json::array();
  for (int h = 1; h <= config.horizon; ++h) {
    const auto A = misfit_matrix(pis, cls, truth, h).values;
    const auto svd = jacobi_svd(A);
    const int r = numerical_rank(A);
    std::vector<double> sigma(svd.sigma.data(), svd.sigma.data() + svd.sigma.size());
    steps.push_back({{"h", h},
                     {"rank", r},
                     {"beta", r > 0 ? factor_matrix(A, r).beta : 0.0},
                     {"singular_values", sigma}});
  }
  const auto l1 = disagreement_check(config.disagreement_instances, rng);
  const auto slab = slab_cut_check(config.slab_trials, rng);
  return {{"num_states", config.num_states},
          {"num_actions", config.num_actions},
          {"horizon", config.horizon},
          {"models", config.models},
          {"policies", pis.size()},
          {"seed", config.seed},
          {"steps", std::move(steps)},
          {"disagreement", {{"instances", l1.instances}, {"triggered", l1.triggered}, {"violations", l1.violations}}},
          {"mvee_shrink", {{"trials", slab.trials}, {"max_ratio", slab.max_ratio}, {"ratios", slab.ratios}}}};
}

}  // namespace ne3::lab

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ne3/dreem.hpp"
#include "ne3/env/combolock.hpp"
#include "ne3/errors.hpp"

using namespace ne3;
using namespace ne3::dreem;

namespace {

TabularMDP lock_truth(int H = 3, std::uint64_t env_seed = 5) {
  env::CombolockConfig cfg;
  cfg.horizon = H;
  cfg.flip_prob = 0.1;
  cfg.env_seed = env_seed;
  return env::true_tabular_model(cfg);
}

// Checks the invariants every oracle-mode run must satisfy.
void check_oracle_run(const DreemResult& r, const ModelClass& cls, const TabularMDP& truth, double eps) {
  const auto& hist = r.version_space.history;
  const int H = truth.horizon(), A = truth.num_actions();
  std::size_t prev = cls.size();
  for (const auto& rec : hist) {
    CHECK(std::find(rec.eliminated.begin(), rec.eliminated.end(), *cls.truth_index) == rec.eliminated.end());
    CHECK(rec.candidates.size() - rec.eliminated.size() <= prev);
    prev = rec.candidates.size() - rec.eliminated.size();
    // An exploring round must expose a misfit above eps / (4 H^2 |A|^2).
    double worst = 0.0;
    for (const auto& w : rec.misfits) worst = std::max(worst, *std::max_element(w.begin(), w.end()));
    CHECK(worst > eps / (4.0 * H * H * A * A));
  }
  CHECK(std::find(r.version_space.surviving.begin(), r.version_space.surviving.end(), *cls.truth_index) !=
        r.version_space.surviving.end());
  CHECK(r.value_gap.has_value());
  CHECK(*r.value_gap <= eps);
}

}  // namespace

TEST_SUITE("dreem") {

TEST_CASE("singleton class exploits immediately") {
  const auto truth = lock_truth();
  ModelClass cls{{truth}, 0};
  const auto pis = all_open_loop_policies(4, 3);
  Rng rng(1);
  DreemConfig cfg;
  const auto r = dreem_run(cls, pis, truth, cfg, rng);
  CHECK(r.rounds == 0);
  CHECK(r.trajectories_used == 0);
  CHECK(r.final_versionspace_size == 1);
  CHECK(*r.value_gap == 0.0);
}

TEST_CASE("lock with thirty perturbed models, oracle misfits") {
  const auto truth = lock_truth();
  const auto pis = all_open_loop_policies(4, 3);
  const double eps = 0.5;
  const double best_open = 0.81;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto cls = perturbed_class(truth, 30, rng);
    DreemConfig cfg;
    cfg.epsilon = eps;
    cfg.phi = eps / (24.0 * 9 * 16);
    cfg.n = 50;
    cfg.round_cap = 1000;
    const auto r = dreem_run(cls, pis, truth, cfg, rng);
    CHECK_FALSE(r.anomaly);
    check_oracle_run(r, cls, truth, eps);
    CHECK(r.trajectories_used == r.rounds * 50);
    // Against the closed-loop optimum (1 after normalization) as well.
    const double v = policy_value_exact(truth, r.exploit_policy);
    CHECK(solve_optimal(truth).value - v <= eps);
    CHECK(v == doctest::Approx(best_open));
  }
}

TEST_CASE("a far-off model goes in the first round") {
  Rng rng(2);
  const auto truth = testing::random_mdp(4, 2, 3, rng, 0.0);
  std::vector<double> P(truth.transitions().begin(), truth.transitions().end());
  for (int r = 0; r < 8; ++r) {
    std::fill(P.begin() + r * 4, P.begin() + r * 4 + 4, 0.0);
    const auto it = std::min_element(truth.transitions().begin() + r * 4, truth.transitions().begin() + r * 4 + 4);
    P[static_cast<std::size_t>(it - truth.transitions().begin())] = 1.0;
  }
  ModelClass cls{{truth, truth.with_transitions(P)}, 0};
  const auto pis = all_open_loop_policies(2, 3);
  DreemConfig cfg;
  const auto r = dreem_run(cls, pis, truth, cfg, rng);
  REQUIRE(r.rounds >= 1);
  CHECK(r.version_space.history.front().eliminated == std::vector<std::size_t>{1});
  CHECK(r.final_versionspace_size == 1);
}

TEST_CASE("update_model_set edge cases") {
  Rng rng(3);
  const auto truth = lock_truth();
  const auto cls = perturbed_class(truth, 10, rng);
  const auto pis = all_open_loop_policies(4, 3);
  DreemConfig cfg;
  cfg.phi = 2.0;  // the largest possible misfit on the L1 scale
  auto vs = VersionSpace::full(cls.size());
  for (std::size_t i = 0; i < pis.size(); i += 7)
    update_model_set(vs, cls, pis, i, 1.0, truth, cfg, {}, rng);
  CHECK(vs.surviving.size() == cls.size());

  cfg.phi = 1e-12;
  for (std::size_t i = 0; i < pis.size(); ++i) update_model_set(vs, cls, pis, i, 1.0, truth, cfg, {}, rng);
  CHECK(std::find(vs.surviving.begin(), vs.surviving.end(), *cls.truth_index) != vs.surviving.end());
}

TEST_CASE("empirical elimination of a planted bad model") {
  Rng rng(4);
  const auto truth = testing::random_mdp(3, 2, 2, rng, 0.0);
  auto bad_rows = std::vector<double>(truth.transitions().begin(), truth.transitions().end());
  for (std::size_t i = 0; i < bad_rows.size(); i += 3) {
    const double a = bad_rows[i];
    bad_rows[i] = bad_rows[i + 1];
    bad_rows[i + 1] = bad_rows[i + 2];
    bad_rows[i + 2] = a;
  }
  ModelClass cls{{truth, truth.with_transitions(bad_rows)}, 0};
  const auto pis = all_open_loop_policies(2, 2);
  const auto F = unique_test_functions(build_pairwise_test_functions(cls.models));
  const double delta = 0.1;
  // phi sits halfway to the smallest misfit the bad model shows; n makes the
  // deviation bound at most phi / 2, so both models land on their side of phi.
  double w_min = 1e9;
  for (int h = 1; h <= 2; ++h) w_min = std::min(w_min, misfit_exact(truth, cls[1], pis[0], h));
  REQUIRE(w_min > 0.05);
  DreemConfig cfg;
  cfg.oracle_misfit = false;
  cfg.phi = w_min / 2;
  cfg.n = 1;
  while (misfit_deviation_bound(cfg.n, 2, pis.size(), 2, delta) > cfg.phi / 2) cfg.n *= 2;
  int removed = 0, truth_lost = 0;
  for (int rep = 0; rep < 50; ++rep) {
    auto vs = VersionSpace::full(2);
    update_model_set(vs, cls, pis, 0, 1.0, truth, cfg, F, rng);
    removed += std::find(vs.surviving.begin(), vs.surviving.end(), 1u) == vs.surviving.end();
    truth_lost += std::find(vs.surviving.begin(), vs.surviving.end(), 0u) == vs.surviving.end();
  }
  CHECK(removed >= static_cast<int>((1 - delta) * 50));
  CHECK(truth_lost <= static_cast<int>(delta * 50));
}

TEST_CASE("more samples never cost the truth more often") {
  Rng rng(5);
  const auto truth = lock_truth();
  const auto pis = all_open_loop_policies(4, 3);
  int lost_n = 0, lost_4n = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    Rng cls_rng(100 + static_cast<std::uint64_t>(rep));
    const auto cls = perturbed_class(truth, 6, cls_rng);
    for (std::size_t mult : {1u, 4u}) {
      DreemConfig cfg;
      cfg.oracle_misfit = false;
      cfg.phi = 0.04;
      cfg.n = 60 * mult;
      cfg.round_cap = 50;
      bool lost = false;
      try {
        const auto r = dreem_run(cls, pis, truth, cfg, rng);
        lost = std::find(r.version_space.surviving.begin(), r.version_space.surviving.end(), *cls.truth_index) ==
               r.version_space.surviving.end();
      } catch (const EliminationFailureError&) {
        lost = true;
      }
      (mult == 1 ? lost_n : lost_4n) += lost;
    }
  }
  MESSAGE("truth eliminated: n " << lost_n << "/50, 4n " << lost_4n << "/50");
  // One-sided 95% margin for a difference of two binomial proportions.
  const double p = (lost_n + lost_4n) / (2.0 * reps);
  CHECK(lost_4n - lost_n <= 1.645 * std::sqrt(2.0 * reps * p * (1 - p)) + 1e-9);
  CHECK(lost_n > 0);  // the setting actually exercises elimination of the truth
}

TEST_CASE("theoretical parameters") {
  const auto p = theoretical_parameters(2, 2, 0.5, 0.1, 1.0, 1.0, 3, 4);
  CHECK(p.phi == doctest::Approx(1.0 / 768.0));
  const auto q = theoretical_parameters(2, 2, 0.5, 0.1, 1.0, 2.0 * p.phi * std::exp(1.0), 3, 4);
  CHECK(q.T == doctest::Approx(2.0 / std::log(5.0 / 3.0)));
  const double L = std::log(4.0 * q.T * 2 * 3 * 4 / 0.1);
  CHECK(q.n == std::ceil(36864.0 * 16 * 16 * L / 0.25));
  const auto wide = theoretical_parameters(2, 2, 1.0, 0.1, 1.0, 1.0, 3, 4);
  CHECK(wide.phi == doctest::Approx(2 * p.phi));
  CHECK(wide.n <= p.n / 4);
  CHECK_THROWS_AS(theoretical_parameters(2, 2, 0.5, 0.1, 1.0, 2.0 * p.phi, 3, 4), ConfigError);
  CHECK_THROWS_AS(theoretical_parameters(0, 2, 0.5, 0.1, 1.0, 1.0, 3, 4), ConfigError);
}

TEST_CASE("doubling schedule") {
  double partial = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    partial += 0.1 / (i * (i + 1.0));
    CHECK(partial < 0.1);
  }

  Rng rng(6);
  const auto truth = lock_truth();
  const auto pis = all_open_loop_policies(4, 3);
  DreemConfig base;
  const auto cls = perturbed_class(truth, 8, rng);
  const double beta = std::max(estimate_beta(pis, cls, truth), 1.0);
  const auto r = doubling_run(cls, pis, truth, 0.5, 0.1, beta, base, rng);
  CHECK(r.outer_iterations == 1);
  CHECK(*r.result.value_gap <= 0.5);
}

TEST_CASE("doubling on a planted rank-4 instance") {
  Rng rng(7);
  const auto truth = testing::random_mdp(4, 2, 3, rng, 0.0);
  ModelClass cls{{truth}, 0};
  for (int i = 0; i < 24; ++i) cls.models.push_back(testing::random_mdp(4, 2, 3, rng));
  for (auto& m : cls.models) m = TabularMDP(4, 2, 3, {m.transitions().begin(), m.transitions().end()},
                                            {truth.rewards().begin(), truth.rewards().end()},
                                            {truth.initial().begin(), truth.initial().end()});
  const auto pis = all_open_loop_policies(2, 3);
  REQUIRE(effective_rank(pis, cls, truth) == 4);
  const double beta = std::max(estimate_beta(pis, cls, truth), 1.0);
  DreemConfig base;
  const auto r = doubling_run(cls, pis, truth, 0.5, 0.1, beta, base, rng);
  CHECK(r.outer_iterations <= 3);

  DreemConfig direct;
  direct.phi = theoretical_parameters(2, 3, 0.5, 0.1, 4.0, beta, cls.size(), pis.size()).phi;
  const auto d = dreem_run(cls, pis, truth, direct, rng);
  CHECK(policy_value_exact(truth, d.exploit_policy) == doctest::Approx(policy_value_exact(truth, r.result.exploit_policy)));
  CHECK(d.exploit_index == r.result.exploit_index);
}

TEST_CASE("perturbed classes") {
  Rng rng(8);
  const auto truth = lock_truth();
  const auto cls = perturbed_class(truth, 30, rng);
  CHECK(cls.size() == 31);
  REQUIRE(cls.truth_index.has_value());
  CHECK(cls[*cls.truth_index].transitions().size() == truth.transitions().size());
  CHECK(std::equal(cls[*cls.truth_index].transitions().begin(), cls[*cls.truth_index].transitions().end(),
                   truth.transitions().begin()));
  int differ = 0;
  for (std::size_t i = 0; i < cls.size(); ++i)
    differ += !std::equal(cls[i].transitions().begin(), cls[i].transitions().end(), truth.transitions().begin());
  CHECK(differ == 30);
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "helpers.hpp"
#include "ne3/ellipsoid.hpp"
#include "ne3/errors.hpp"
#include "ne3/kernels.hpp"
#include "ne3/linalg.hpp"
#include "ne3/low_rank.hpp"
#include "ne3/misfit.hpp"

using namespace ne3;

namespace {

// Perturbs every row of `m` toward a random distribution by `eps`.
TabularMDP perturb(const TabularMDP& m, double eps, Rng& rng) {
  std::vector<double> P(m.transitions().begin(), m.transitions().end());
  const auto S = static_cast<std::size_t>(m.num_states());
  for (std::size_t r = 0; r < P.size() / S; ++r) {
    std::vector<double> q(S);
    double total = 0.0;
    for (auto& x : q) total += (x = rng.uniform());
    for (std::size_t n = 0; n < S; ++n) P[r * S + n] = (1 - eps) * P[r * S + n] + eps * q[n] / total;
  }
  return m.with_transitions(std::move(P));
}

// Triple sum of the disagreement definition with enumerated roll-ins.
double brute_disagreement(const TabularMDP& a, const TabularMDP& b, const Policy& pi, int h) {
  const auto da = testing::enumerate_distribution(a, pi, h - 1);
  const auto db = testing::enumerate_distribution(b, pi, h - 1);
  double total = 0.0;
  for (int s = 0; s < a.num_states(); ++s)
    for (int act = 0; act < a.num_actions(); ++act)
      for (int n = 0; n < a.num_states(); ++n)
        total += std::abs(a.p(s, act, n) * da[static_cast<std::size_t>(s)] - b.p(s, act, n) * db[static_cast<std::size_t>(s)]) /
                 a.num_actions();
  return total;
}

double brute_misfit(const TabularMDP& truth, const TabularMDP& m, const Policy& pi, int h) {
  const auto d = testing::enumerate_distribution(truth, pi, h - 1);
  double total = 0.0;
  for (int s = 0; s < truth.num_states(); ++s)
    for (int a = 0; a < truth.num_actions(); ++a)
      for (int n = 0; n < truth.num_states(); ++n)
        total += d[static_cast<std::size_t>(s)] * std::abs(m.p(s, a, n) - truth.p(s, a, n)) / truth.num_actions();
  return total;
}

std::vector<Policy> random_policies(int count, int A, int H, Rng& rng) {
  std::vector<Policy> out;
  for (int i = 0; i < count; ++i) {
    std::vector<int> seq(static_cast<std::size_t>(H));
    for (auto& a : seq) a = rng.uniform_index(static_cast<std::size_t>(A));
    out.push_back(Policy::open_loop(seq, static_cast<std::size_t>(i)));
  }
  return out;
}

}  // namespace

TEST_SUITE("misfit") {

TEST_CASE("misfit of the truth is zero") {
  Rng rng(1);
  const auto m = testing::random_mdp(4, 3, 3, rng);
  for (const auto& pi : all_open_loop_policies(3, 3))
    for (int h = 1; h <= 3; ++h) CHECK(misfit_exact(m, m, pi, h) == 0.0);
}

TEST_CASE("hand-computed misfit: deterministic truth, model split over two successors") {
  // Truth sends (0, a) to state 1; the model splits (0, 0) evenly over {1, 2}.
  std::vector<double> P1 = {0, 1, 0, 0, 0, 1, 0, 0, 1};
  std::vector<double> P2 = {0, .5, .5, 0, 0, 1, 0, 0, 1};
  TabularMDP truth(3, 1, 1, P1, {0, 0, 0}, 0);
  TabularMDP model(3, 1, 1, P2, {0, 0, 0}, 0);
  // L1 scale: |1 - 1/2| + |0 - 1/2| = 1 (half of it, 1/2, on the halved scale).
  CHECK(misfit_exact(truth, model, Policy::open_loop({0}), 1) == doctest::Approx(1.0));

  // With a second, correctly modelled action the uniform last action halves it.
  std::vector<double> Q1 = {0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1};
  std::vector<double> Q2 = {0, .5, .5, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1};
  TabularMDP truth2(3, 2, 1, Q1, {0, 0, 0}, 0);
  TabularMDP model2(3, 2, 1, Q2, {0, 0, 0}, 0);
  CHECK(misfit_exact(truth2, model2, Policy::open_loop({1}), 1) == doctest::Approx(0.5));
}

TEST_CASE("misfit and IPM objective match enumeration") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int S = 2 + rng.uniform_index(3), A = 1 + rng.uniform_index(3), H = 1 + rng.uniform_index(3);
    const auto truth = testing::random_mdp(S, A, H, rng);
    const auto m = testing::random_mdp(S, A, H, rng);
    const auto pis = random_policies(3, A, H, rng);
    const auto f = sign_table(m, truth);
    for (const auto& pi : pis) {
      for (int h = 1; h <= H; ++h) {
        const double w = misfit_exact(truth, m, pi, h);
        CHECK(std::abs(w - brute_misfit(truth, m, pi, h)) < 1e-12);
        CHECK(std::abs(ipm_objective(truth, m, pi, h, f) - w) < 1e-9);
        CHECK(w >= 0.0);
        CHECK(w <= 2.0);
      }
    }
  }
}

TEST_CASE("test-function class") {
  Rng rng(3);
  const auto truth = testing::random_mdp(3, 2, 2, rng);
  std::vector<TabularMDP> models = {truth, testing::random_mdp(3, 2, 2, rng), testing::random_mdp(3, 2, 2, rng)};
  const auto pis = all_open_loop_policies(2, 2);
  const auto F = build_test_functions(pis, models, truth);
  CHECK(F.size() == 2 * pis.size() * models.size() * 2);
  for (const auto& f : F) {
    for (double x : f.values) CHECK(std::abs(x) <= 1.0);
    if (f.model == 0)
      for (double x : f.values) CHECK(x == 0.0);
  }
  const auto U = unique_test_functions(F);
  CHECK(U.size() == 5);  // zero table plus +/- of two models
  const auto pairs = build_pairwise_test_functions(models);
  CHECK(pairs.size() == 6);
}

TEST_CASE("empirical misfit special cases") {
  Rng rng(4);
  const auto truth = testing::random_mdp(3, 2, 2, rng);
  const auto m = testing::random_mdp(3, 2, 2, rng);
  std::vector<TabularMDP> models = {truth, m};
  const auto pis = all_open_loop_policies(2, 2);
  const auto F = build_test_functions(pis, models, truth);
  CHECK_THROWS_AS(misfit_empirical(std::vector<TransitionSample>{}, m, F), InsufficientDataError);

  // One transition: the value is max_f [E_{P_M} f - f(s, a, s')] at that point.
  const TransitionSample t{1, 0, 2};
  double expect = -1e9;
  for (const auto& f : F) {
    double model_side = 0.0;
    for (int n = 0; n < 3; ++n) model_side += m.p(1, 0, n) * f.values[static_cast<std::size_t>((1 * 2 + 0) * 3 + n)];
    expect = std::max(expect, model_side - f.values[static_cast<std::size_t>((1 * 2 + 0) * 3 + 2)]);
  }
  CHECK(misfit_empirical(std::vector<TransitionSample>{t}, m, F) == doctest::Approx(expect).epsilon(1e-12));

  // The truth's empirical misfit shrinks with n (averaged over repeats).
  double prev = 1e9;
  for (std::size_t n : {100u, 1000u, 10000u, 100000u}) {
    double mean = 0.0;
    for (int r = 0; r < 5; ++r) {
      const auto data = collect_misfit_dataset(truth, pis[1], 2, n, rng);
      const double w = misfit_empirical(data, truth, F);
      CHECK(w <= misfit_deviation_bound(n, 2, pis.size(), 2, 0.1));
      mean += w / 5;
    }
    CHECK(mean < prev);
    prev = mean;
  }
  CHECK(prev < 0.02);
}

TEST_CASE("empirical misfit deviation bound holds at the stated rate") {
  Rng rng(5);
  const int S = 3, A = 2, H = 2;
  const std::size_t n = 2000;
  const double delta = 0.1;
  for (int inst = 0; inst < 3; ++inst) {
    const auto truth = testing::random_mdp(S, A, H, rng);
    std::vector<TabularMDP> models = {truth, perturb(truth, 0.3, rng), testing::random_mdp(S, A, H, rng)};
    const auto pis = all_open_loop_policies(A, H);
    const auto F = unique_test_functions(build_test_functions(pis, models, truth));
    const double bound = misfit_deviation_bound(n, models.size(), pis.size(), H, delta);
    int violations = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
      const auto& pi = pis[static_cast<std::size_t>(r) % pis.size()];
      const int h = 1 + r % H;
      const auto data = collect_misfit_dataset(truth, pi, h, n, rng);
      for (const auto& m : models)
        violations += std::abs(misfit_empirical(data, m, F) - misfit_exact(truth, m, pi, h)) > bound;
    }
    CHECK(violations <= static_cast<int>(delta * reps * models.size()));
  }
}

TEST_CASE("disagreement properties") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const int S = 2 + rng.uniform_index(3), A = 1 + rng.uniform_index(3), H = 1 + rng.uniform_index(3);
    const auto a = testing::random_mdp(S, A, H, rng);
    const auto b = testing::random_mdp(S, A, H, rng);
    for (const auto& pi : random_policies(2, A, H, rng)) {
      for (int h = 1; h <= H; ++h) {
        CHECK(disagreement(a, a, pi, h) == 0.0);
        CHECK(disagreement(a, b, pi, h) == doctest::Approx(disagreement(b, a, pi, h)).epsilon(1e-14));
        CHECK(std::abs(disagreement(a, b, pi, h) - brute_disagreement(a, b, pi, h)) < 1e-12);
      }
    }
  }
}

TEST_CASE("v_explore") {
  Rng rng(7);
  const auto a = testing::random_mdp(3, 2, 3, rng);
  const auto b = testing::random_mdp(3, 2, 3, rng);
  const auto c = testing::random_mdp(3, 2, 3, rng);
  const auto pi = Policy::open_loop({0, 1, 1});
  CHECK(v_explore(pi, std::vector<TabularMDP>{a}) == 0.0);
  CHECK(v_explore(pi, std::vector<TabularMDP>{a, a, a}) == 0.0);
  double pair = 0.0;
  for (int h = 1; h <= 3; ++h) pair += brute_disagreement(a, b, pi, h);
  CHECK(v_explore(pi, std::vector<TabularMDP>{a, b}) == doctest::Approx(pair).epsilon(1e-12));
  double best = 0.0;
  for (const auto* x : {&a, &b, &c})
    for (const auto* y : {&a, &b, &c}) {
      double s = 0.0;
      for (int h = 1; h <= 3; ++h) s += brute_disagreement(*x, *y, pi, h);
      best = std::max(best, s);
    }
  CHECK(v_explore(pi, std::vector<TabularMDP>{a, b, c}) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("disagreement implies a large misfit at some step") {
  Rng rng(8);
  int violations = 0, triggered = 0;
  for (int inst = 0; inst < 300; ++inst) {
    const int S = 2 + rng.uniform_index(4), A = 1 + rng.uniform_index(3), H = 1 + rng.uniform_index(4);
    const auto truth = testing::random_mdp(S, A, H, rng);
    const auto m1 = perturb(truth, rng.uniform(), rng);
    const auto m2 = perturb(truth, rng.uniform(), rng);
    const auto pi = random_policies(1, A, H, rng).front();
    for (int h = 1; h <= H; ++h) {
      const double D = disagreement(m1, m2, pi, h);
      const double alpha = rng.uniform() * D * 1.2;
      if (!(D > alpha)) continue;
      ++triggered;
      bool found = false;
      for (int k = 1; k <= h && !found; ++k)
        found = std::max(misfit_exact(truth, m1, pi, k), misfit_exact(truth, m2, pi, k)) > alpha / (4.0 * A * H);
      violations += !found;
    }
  }
  CHECK(triggered > 100);
  CHECK(violations == 0);
}

TEST_CASE("misfit matrix") {
  Rng rng(9);
  const auto truth = testing::random_mdp(4, 2, 3, rng);
  ModelClass cls{{truth}, 0};
  const auto one = misfit_matrix(std::vector<Policy>{Policy::open_loop({0, 0, 0})}, cls, truth, 2);
  CHECK(one.values.rows() == 1);
  CHECK(one.values.cols() == 1);
  CHECK(one.values(0, 0) == 0.0);

  for (int i = 0; i < 9; ++i) cls.models.push_back(perturb(truth, rng.uniform(), rng));
  std::swap(cls.models[0], cls.models[4]);
  cls.truth_index = 4;
  const auto pis = random_policies(10, 2, 3, rng);
  for (int h = 1; h <= 3; ++h) {
    const auto mm = misfit_matrix(pis, cls, truth, h);
    for (int i = 0; i < 10; ++i) {
      CHECK(mm.values(i, 4) == 0.0);
      for (int j = 0; j < 10; ++j) {
        CHECK(mm.values(i, j) >= 0.0);
        CHECK(mm.values(i, j) <= 2.0);
        CHECK(mm.values(i, j) == doctest::Approx(brute_misfit(truth, cls[static_cast<std::size_t>(j)], pis[static_cast<std::size_t>(i)], h)).epsilon(1e-12));
      }
    }
  }
  ModelClass bad{{truth}, 3};
  CHECK_THROWS_AS(bad.validate(), IndexError);
}

TEST_CASE("Jacobi SVD against Eigen") {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + rng.uniform_index(7), n = 1 + rng.uniform_index(7);
    Eigen::MatrixXd a(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1, 1);
    const auto mine = jacobi_svd(a);
    const Eigen::JacobiSVD<Eigen::MatrixXd> ref(a);
    REQUIRE(mine.sigma.size() == ref.singularValues().size());
    for (Eigen::Index k = 0; k < mine.sigma.size(); ++k) CHECK(std::abs(mine.sigma(k) - ref.singularValues()(k)) < 1e-12);
    CHECK((mine.U * mine.sigma.asDiagonal() * mine.V.transpose() - a).norm() < 1e-12);
  }
}

TEST_CASE("numerical rank") {
  CHECK(numerical_rank(Eigen::MatrixXd::Zero(4, 3)) == 0);
  Eigen::VectorXd u(4), v(3);
  u << 1, 2, 3, 4;
  v << 0.5, -1, 2;
  CHECK(numerical_rank(u * v.transpose()) == 1);
  CHECK(numerical_rank(Eigen::MatrixXd::Identity(5, 5)) == 5);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + rng.uniform_index(4);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(8, 6);
    for (int k = 0; k < r; ++k) {
      Eigen::VectorXd x(8), y(6);
      for (int i = 0; i < 8; ++i) x(i) = rng.uniform(-1, 1);
      for (int i = 0; i < 6; ++i) y(i) = rng.uniform(-1, 1);
      a += x * y.transpose();
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> ref(a);
    int expect = 0;
    for (Eigen::Index k = 0; k < ref.singularValues().size(); ++k) expect += ref.singularValues()(k) > 1e-8 * ref.singularValues()(0);
    CHECK(numerical_rank(a) == expect);
    CHECK(expect == r);
  }
}

TEST_CASE("low-rank synthesis") {
  Rng rng(12);
  const auto one = low_rank_mdp_synthesize(5, 3, 1, rng);
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 3; ++a)
      for (int n = 0; n < 5; ++n) CHECK(one.truth.p(s, a, n) == doctest::Approx(one.truth.p(0, 0, n)).epsilon(1e-12));
  const auto three = low_rank_mdp_synthesize(6, 2, 3, rng);
  const Eigen::MatrixXd g = three.factors.product();
  for (Eigen::Index c = 0; c < g.cols(); ++c) CHECK(std::abs(g.col(c).sum() - 1.0) < 1e-9);
  CHECK((g.array() >= 0).all());
  CHECK(numerical_rank(g) <= 3);
  CHECK_THROWS_AS(low_rank_mdp_synthesize(3, 2, 4, rng), ConfigError);
}

TEST_CASE("rank bounds of misfit matrices") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int S = 2 + rng.uniform_index(3);
    const auto truth = testing::random_mdp(S, 2, 3, rng);
    ModelClass cls{{truth}, 0};
    for (int i = 0; i < 12; ++i) cls.models.push_back(testing::random_mdp(S, 2, 3, rng));
    const auto pis = all_open_loop_policies(2, 3);
    for (int h = 1; h <= 3; ++h) CHECK(numerical_rank(misfit_matrix(pis, cls, truth, h).values) <= S);
  }
  for (int K = 1; K <= 3; ++K) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto inst = low_rank_mdp_synthesize(6, 2, K, rng);
      ModelClass cls{{inst.truth}, 0};
      for (int i = 0; i < 12; ++i) cls.models.push_back(perturb(inst.truth, rng.uniform(), rng));
      const auto pis = all_open_loop_policies(2, 3);
      for (int h = 2; h <= 3; ++h) CHECK(numerical_rank(misfit_matrix(pis, cls, inst.truth, h).values) <= K);
    }
  }
}

TEST_CASE("factor_matrix") {
  Eigen::VectorXd u(3), v(4);
  u << 1, -2, 0.5;
  v << 2, 1, 0, -1;
  const Eigen::MatrixXd b = u * v.transpose();
  const auto f = factor_matrix(b, 1);
  CHECK((f.U * f.V.transpose() - b).norm() < 1e-12);
  CHECK(f.residual < 1e-12);
  CHECK_THROWS_AS(factor_matrix(Eigen::MatrixXd::Identity(3, 3), 2), InfeasibleError);

  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd a(6, 5);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 5; ++j) a(i, j) = rng.uniform();
    const auto g = factor_matrix(a, 5);
    CHECK(g.residual < 1e-8);
    // |B_ij| = |u_i . v_j| <= |u_i| |v_j| <= beta, and sigma_max <= sqrt(mn) max |B_ij|.
    const Eigen::JacobiSVD<Eigen::MatrixXd> ref(a);
    CHECK(g.beta >= a.cwiseAbs().maxCoeff() - 1e-12);
    CHECK(g.beta >= ref.singularValues()(0) / std::sqrt(30.0) - 1e-12);
  }
}

TEST_CASE("MVEE basics") {
  for (int d = 1; d <= 4; ++d) {
    const Eigen::MatrixXd pts = Eigen::MatrixXd::Identity(d, d);
    const auto e = mvee_origin_centered(pts, 1e-9);
    CHECK((e.Q - Eigen::MatrixXd::Identity(d, d)).norm() < 1e-6);
  }
  Eigen::MatrixXd one(1, 1);
  one << -2.5;
  const auto seg = mvee_origin_centered(one);
  CHECK(std::sqrt(seg.Q(0, 0)) == doctest::Approx(2.5));

  // Degenerate cloud gets regularized but still contains its points.
  Eigen::MatrixXd line(3, 2);
  line << 1, 1, 2, 2, -0.5, -0.5;
  const auto flat = mvee_origin_centered(line, 1e-6);
  for (int i = 0; i < 3; ++i) CHECK(flat.gauge(line.row(i).transpose()) <= 1.0 + 1e-6);
}

TEST_CASE("MVEE is no larger than hand-built enclosing ellipsoids") {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd pts(12, 2);
    for (int i = 0; i < 12; ++i) pts.row(i) << rng.uniform(-1, 1) * 2.0, rng.uniform(-1, 1);
    const auto e = mvee_origin_centered(pts, 1e-8);
    for (int i = 0; i < 12; ++i) CHECK(e.gauge(pts.row(i).transpose()) <= 1.0 + 1e-8);
    // Candidates: axis-aligned boxes' circumscribed ellipses, the enclosing disk,
    // and scaled covariance shapes, each grown until every point fits.
    std::vector<Eigen::MatrixXd> shapes;
    const double bx = pts.col(0).cwiseAbs().maxCoeff(), by = pts.col(1).cwiseAbs().maxCoeff();
    shapes.push_back(Eigen::Vector2d(2 * bx * bx, 2 * by * by).asDiagonal());
    shapes.push_back(Eigen::MatrixXd::Identity(2, 2));
    shapes.push_back(pts.transpose() * pts);
    shapes.push_back(Eigen::Vector2d(bx * bx, by * by).asDiagonal());
    Eigen::Matrix2d tilt;
    tilt << 2, 0.5, 0.5, 1;
    shapes.push_back(tilt);
    for (const auto& s : shapes) {
      Ellipsoid cand{s};
      double worst = 0.0;
      for (int i = 0; i < 12; ++i) worst = std::max(worst, cand.gauge(pts.row(i).transpose()));
      cand.Q *= worst;  // now encloses every point
      CHECK(e.relative_volume() <= cand.relative_volume() * (1 + 1e-6));
    }
  }
}

TEST_CASE("slab cut volume ratio matches a sampled MVEE") {
  Rng rng(16);
  for (int d : {2, 3}) {
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Random(d, d);
      const Ellipsoid o{A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d)};
      Eigen::VectorXd p = Eigen::VectorXd::Random(d);
      const double width = o.support(p);
      const double phi = width / (6.0 * std::sqrt(d)) * rng.uniform(0.2, 0.95);
      const auto cut = volume_shrink_check(o, p, width, phi);
      CHECK(cut.ratio <= 0.6);

      // Oracle: MVEE of points on the boundary of the cut region.
      const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(o.Q).matrixL();
      std::vector<Eigen::VectorXd> pts;
      const int samples = d == 2 ? 2000 : 6000;
      for (int i = 0; i < samples; ++i) {
        Eigen::VectorXd y(d);
        for (int k = 0; k < d; ++k) y(k) = rng.uniform(-1, 1);
        if (y.norm() < 1e-9) continue;
        y /= y.norm();
        Eigen::VectorXd v = L * y;
        const double t = p.dot(v);
        if (std::abs(t) > 2 * phi) {
          // Project onto the cut plane rim: scale the component along the
          // slab normal in the ball frame, keep the point on the sphere.
          const Eigen::VectorXd u = (L.transpose() * p).normalized();
          const double c = 2 * phi / width;
          Eigen::VectorXd perp = y - y.dot(u) * u;
          if (perp.norm() < 1e-12) continue;
          y = std::copysign(c, y.dot(u)) * u + std::sqrt(1 - c * c) * perp.normalized();
          v = L * y;
        }
        pts.push_back(v);
      }
      Eigen::MatrixXd M(static_cast<Eigen::Index>(pts.size()), d);
      for (std::size_t i = 0; i < pts.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
      const auto sampled = mvee_origin_centered(M, 1e-6);
      const double ratio = sampled.relative_volume() / o.relative_volume();
      CHECK(ratio <= cut.ratio * (1 + 1e-3));
      CHECK(ratio >= cut.ratio * 0.97);
      for (const auto& v : pts) CHECK(cut.cut.gauge(v) <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("slab cut preconditions") {
  const Ellipsoid disk{Eigen::MatrixXd::Identity(2, 2)};
  Eigen::VectorXd p(2);
  p << 1, 0;
  // 2 phi equal to the diameter: the trigger 6 sqrt(2) phi cannot be met.
  CHECK_THROWS_AS(volume_shrink_check(disk, p, 1.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(volume_shrink_check(disk, p, 1.5, 0.01), PreconditionError);  // witness outside
  const auto thin = volume_shrink_check(disk, p, 1.0, 0.02);
  // Closed form for the unit disk, slab |x| <= c: ratio = sqrt(2) c sqrt(2 (1 - c^2)).
  const double c = 0.04;
  CHECK(thin.ratio == doctest::Approx(2 * c * std::sqrt(1 - c * c)));
  CHECK(thin.ratio < 0.6);
}

}  // TEST_SUITE

TEST_SUITE("kernels") {

TEST_CASE("serial and OpenMP kernels agree exactly") {
  Rng rng(20);
  const auto truth = testing::random_mdp(5, 3, 3, rng);
  std::vector<TabularMDP> models;
  for (int i = 0; i < 12; ++i) models.push_back(perturb(truth, rng.uniform(), rng));
  std::vector<const TabularMDP*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);
  const auto pis = all_open_loop_policies(3, 3);
  for (int threads : {1, 2, 4}) {
    kernels::set_threads(threads);
    for (int h = 1; h <= 3; ++h) {
      const auto a = kernels::serial::misfit_matrix(truth, pis, ptrs, h);
      const auto b = kernels::omp::misfit_matrix(truth, pis, ptrs, h);
      CHECK(a == b);
    }
    CHECK(kernels::serial::v_explore_all(pis, ptrs) == kernels::omp::v_explore_all(pis, ptrs));
    std::vector<double> pts(5000 * 7);
    for (auto& x : pts) x = rng.uniform();
    std::vector<double> q(7, 0.5);
    CHECK(kernels::serial::nearest_distance(pts, 7, q) == kernels::omp::nearest_distance(pts, 7, q));
  }
  kernels::set_threads(1);
  CHECK(std::isinf(kernels::serial::nearest_distance({}, 3, std::vector<double>(3, 0.0))));
}

}  // TEST_SUITE

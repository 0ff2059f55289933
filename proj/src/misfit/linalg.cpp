#include "ne3/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ne3/errors.hpp"

namespace ne3 {

Svd jacobi_svd(const Eigen::MatrixXd& a, double tol, int max_sweeps) {
  // Work on the orientation with at least as many rows as columns.
  const bool transposed = a.rows() < a.cols();
  Eigen::MatrixXd w = transposed ? Eigen::MatrixXd(a.transpose()) : a;
  const Eigen::Index n = w.cols();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  // Columns below this norm are numerical zeros; rotating them only churns
  // rounding noise and can keep the sweep from settling.
  const double floor = 1e-15 * w.norm();
  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        if (std::min(alpha, beta) <= floor * floor) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          const double x = w(i, p);
          const double y = w(i, q);
          w(i, p) = c * x - s * y;
          w(i, q) = s * x + c * y;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double x = v(i, p);
          const double y = v(i, q);
          v(i, p) = c * x - s * y;
          v(i, q) = s * x + c * y;
        }
      }
    }
  }
  if (!converged) throw ConvergenceError("Jacobi SVD did not converge", tol);

  Eigen::VectorXd norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return norms(x) > norms(y); });

  Svd out;
  out.sigma.resize(n);
  out.U = Eigen::MatrixXd::Zero(w.rows(), n);
  out.V.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[static_cast<std::size_t>(k)];
    out.sigma(k) = norms(j);
    if (norms(j) > 0.0) out.U.col(k) = w.col(j) / norms(j);
    out.V.col(k) = v.col(j);
  }
  if (transposed) std::swap(out.U, out.V);
  return out;
}

int numerical_rank(const Eigen::MatrixXd& a, double tol) {
  if (a.size() == 0) return 0;
  const auto svd = jacobi_svd(a);
  const double top = svd.sigma(0);
  if (top == 0.0) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < svd.sigma.size(); ++k)
    if (svd.sigma(k) > tol * top) ++r;
  return r;
}

Factorization factor_matrix(const Eigen::MatrixXd& b, int target_rank, double tol) {
  if (target_rank < 1) throw InfeasibleError("target rank must be positive");
  const auto svd = jacobi_svd(b);
  const double top = svd.sigma.size() ? svd.sigma(0) : 0.0;
  int r = 0;
  for (Eigen::Index k = 0; k < svd.sigma.size(); ++k)
    if (top > 0.0 && svd.sigma(k) > tol * top) ++r;
  if (r > target_rank) {
    throw InfeasibleError("matrix rank " + std::to_string(r) + " exceeds target rank " + std::to_string(target_rank));
  }
  const Eigen::Index k = std::min<Eigen::Index>(target_rank, svd.sigma.size());
  const Eigen::VectorXd root = svd.sigma.head(k).cwiseSqrt();
  Factorization f;
  f.U = svd.U.leftCols(k) * root.asDiagonal();
  f.V = svd.V.leftCols(k) * root.asDiagonal();
  f.beta = f.U.rowwise().norm().maxCoeff() * f.V.rowwise().norm().maxCoeff();
  f.residual = (b - f.U * f.V.transpose()).norm();
  return f;
}

}  // namespace ne3

#pragma once

// Small dense linear algebra for the rank experiments.

#include <Eigen/Dense>

namespace ne3 {

/// Thin SVD A = U diag(sigma) V^T with sigma sorted in decreasing order.
struct Svd {
  Eigen::MatrixXd U;      // m x k
  Eigen::VectorXd sigma;  // k = min(m, n)
  Eigen::MatrixXd V;      // n x k
};

/// One-sided (Hestenes) Jacobi SVD. Sweeps until every column pair is
/// orthogonal to `tol` relative to the pair's norms.
Svd jacobi_svd(const Eigen::MatrixXd& a, double tol = 1e-15, int max_sweeps = 100);

/// Singular values above tol * sigma_max; 0 for a zero or empty matrix.
int numerical_rank(const Eigen::MatrixXd& a, double tol = 1e-8);

/// B ~ U V^T from the leading `target_rank` singular triplets, with sqrt(Sigma)
/// on each side. beta = max_i |u_i| * max_j |v_j| over rows.
struct Factorization {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  double beta = 0.0;
  /// Frobenius norm of B - U V^T.
  double residual = 0.0;
};

/// Throws InfeasibleError when numerical_rank(B, tol) exceeds target_rank.
Factorization factor_matrix(const Eigen::MatrixXd& b, int target_rank, double tol = 1e-8);

}  // namespace ne3

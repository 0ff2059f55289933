#pragma once

// Origin-centered ellipsoids {x : x^T Q^{-1} x <= 1} and the slab cut that
// drives the iteration bound of version-space elimination.

#include <Eigen/Dense>

namespace ne3 {

struct Ellipsoid {
  Eigen::MatrixXd Q;

  int dim() const noexcept { return static_cast<int>(Q.rows()); }
  /// x^T Q^{-1} x; at most 1 inside.
  double gauge(const Eigen::VectorXd& x) const;
  /// Volume divided by the unit ball's volume, i.e. sqrt(det Q).
  double relative_volume() const;
  /// Half-width along direction p: max p^T x over the ellipsoid = sqrt(p^T Q p).
  double support(const Eigen::VectorXd& p) const;
};

/// Minimum-volume origin-centered ellipsoid enclosing the rows of `points`
/// and their negations (Khachiyan's algorithm). Stops once every point has
/// gauge <= 1 + tol. Points that do not span R^d get tol * I added to Q.
/// Throws ConvergenceError after max_iter iterations.
Ellipsoid mvee_origin_centered(const Eigen::MatrixXd& points, double tol = 1e-7, int max_iter = 200000);

struct ShrinkResult {
  Ellipsoid cut;  // MVEE of {v in O : |p^T v| <= 2 phi}
  double ratio = 1.0;  // vol(cut) / vol(O)
};

/// Cuts `o` to the slab |p^T v| <= 2 phi and returns the exact MVEE of the
/// intersection with its volume ratio. `witness_value` is p^T v' for some v'
/// in `o`; it must exceed 6 sqrt(d) phi and be at most the support of `o`
/// along p, otherwise PreconditionError.
ShrinkResult volume_shrink_check(const Ellipsoid& o, const Eigen::VectorXd& p, double witness_value, double phi);

}  // namespace ne3

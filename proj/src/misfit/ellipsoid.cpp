#include "ne3/ellipsoid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ne3/errors.hpp"
#include "ne3/linalg.hpp"

namespace ne3 {

double Ellipsoid::gauge(const Eigen::VectorXd& x) const { return x.dot(Q.ldlt().solve(x)); }

double Ellipsoid::relative_volume() const { return std::sqrt(Q.determinant()); }

double Ellipsoid::support(const Eigen::VectorXd& p) const { return std::sqrt(p.dot(Q * p)); }

Ellipsoid mvee_origin_centered(const Eigen::MatrixXd& points, double tol, int max_iter) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n == 0 || d == 0) throw ConfigError("MVEE needs at least one point");
  const bool spans = numerical_rank(points, 1e-12) == d;
  const double dd = static_cast<double>(d);

  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd m(n);
  double residual = 0.0;
  for (int it = 0; it <= max_iter; ++it) {
    Eigen::MatrixXd X = points.transpose() * u.asDiagonal() * points;
    if (!spans) X += (tol / dd) * Eigen::MatrixXd::Identity(d, d);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(X);
    const Eigen::MatrixXd solved = ldlt.solve(points.transpose());
    m = (points.transpose().array() * solved.array()).colwise().sum().transpose();
    Eigen::Index j = 0;
    const double mj = m.maxCoeff(&j);
    residual = mj / dd - 1.0;
    if (residual <= tol) {
      Ellipsoid e{dd * X};
      if (!spans) e.Q += tol * Eigen::MatrixXd::Identity(d, d);
      e.Q = 0.5 * (e.Q + e.Q.transpose());
      return e;
    }
    // Away step (Todd and Yildirim) when the smallest supported point lags
    // further below d than the largest sits above it.
    Eigen::Index k = -1;
    double mk = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i)
      if (u(i) > 0.0 && m(i) < mk) mk = m(i), k = i;
    if (k >= 0 && dd - mk > mj - dd) {
      const double lo = -u(k) / (1.0 - u(k));
      const double step = mk <= 1.0 ? lo : std::max(lo, (mk - dd) / (dd * (mk - 1.0)));
      u *= 1.0 - step;
      u(k) += step;
      if (step == lo) u(k) = 0.0;
      continue;
    }
    const double step = (mj - dd) / (dd * (mj - 1.0));
    u *= 1.0 - step;
    u(j) += step;
  }
  throw ConvergenceError("MVEE did not reach tolerance", residual);
}

ShrinkResult volume_shrink_check(const Ellipsoid& o, const Eigen::VectorXd& p, double witness_value, double phi) {
  const int d = o.dim();
  if (p.size() != d) throw ConfigError("direction has the wrong dimension");
  if (!(phi > 0.0)) throw PreconditionError("phi must be positive");
  const double trigger = 6.0 * std::sqrt(static_cast<double>(d)) * phi;
  if (!(witness_value > trigger)) throw PreconditionError("witness value does not exceed 6 sqrt(d) phi");
  const double width = o.support(p);
  if (witness_value > width * (1.0 + 1e-9)) throw PreconditionError("witness lies outside the ellipsoid");

  // In coordinates y = L^{-1} v (Q = L L^T) the ellipsoid is the unit ball
  // and the slab is |u^T y| <= c with u the unit image of p.
  const Eigen::LLT<Eigen::MatrixXd> llt(o.Q);
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::VectorXd lp = L.transpose() * p;
  const Eigen::VectorXd uvec = lp / lp.norm();
  const double c = 2.0 * phi / width;
  const double dd = d;

  ShrinkResult out;
  if (c * c * dd >= 1.0) {
    out.cut = o;
    out.ratio = 1.0;
    return out;
  }
  const double a2 = dd * c * c;
  const double b2 = d == 1 ? 0.0 : dd * (1.0 - c * c) / (dd - 1.0);
  const Eigen::MatrixXd uu = uvec * uvec.transpose();
  const Eigen::MatrixXd Y = a2 * uu + b2 * (Eigen::MatrixXd::Identity(d, d) - uu);
  out.cut.Q = L * Y * L.transpose();
  out.ratio = std::sqrt(a2) * std::pow(b2, (dd - 1.0) / 2.0);
  return out;
}

}  // namespace ne3

#include "ne3/kernels.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "ne3/errors.hpp"
#include "ne3/misfit.hpp"

#ifdef NE3_HAVE_OPENMP
#include <omp.h>
#endif

namespace ne3::kernels {

namespace {

// max over model pairs of sum_h D for one policy.
double v_explore_one(const Policy& policy, std::span<const TabularMDP* const> models) {
  if (models.size() < 2) return 0.0;
  const int H = models.front()->horizon();
  std::vector<std::vector<Distribution>> dists;
  dists.reserve(models.size());
  for (const auto* m : models) dists.push_back(state_distributions(*m, policy));
  double best = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      double sum = 0.0;
      for (int h = 1; h <= H; ++h) {
        const auto k = static_cast<std::size_t>(h - 1);
        sum += disagreement_from(*models[i], dists[i][k].probs, *models[j], dists[j][k].probs);
      }
      best = std::max(best, sum);
    }
  }
  return best;
}

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double d = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double x = a[k] - b[k];
    d += x * x;
  }
  return d;
}

std::vector<Distribution> rollins(const TabularMDP& truth, std::span<const Policy> policies, int h) {
  std::vector<Distribution> out;
  out.reserve(policies.size());
  for (const auto& p : policies) out.push_back(state_distribution(truth, p, h - 1));
  return out;
}

}  // namespace

namespace serial {

Eigen::MatrixXd misfit_matrix(const TabularMDP& truth, std::span<const Policy> policies,
                              std::span<const TabularMDP* const> models, int h) {
  const auto r = rollins(truth, policies, h);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(policies.size()), static_cast<Eigen::Index>(models.size()));
  for (std::size_t i = 0; i < policies.size(); ++i)
    for (std::size_t j = 0; j < models.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = misfit_from_rollin(truth, *models[j], r[i].probs);
  return out;
}

std::vector<double> v_explore_all(std::span<const Policy> policies, std::span<const TabularMDP* const> models) {
  std::vector<double> out(policies.size());
  for (std::size_t i = 0; i < policies.size(); ++i) out[i] = v_explore_one(policies[i], models);
  return out;
}

double nearest_distance(std::span<const double> points, std::size_t dim, std::span<const double> query) {
  if (query.size() != dim) throw IndexError("query has the wrong dimension");
  const std::size_t n = dim == 0 ? 0 : points.size() / dim;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) best = std::min(best, squared_distance(points.data() + i * dim, query.data(), dim));
  return std::sqrt(best);
}

}  // namespace serial

namespace omp {

Eigen::MatrixXd misfit_matrix(const TabularMDP& truth, std::span<const Policy> policies,
                              std::span<const TabularMDP* const> models, int h) {
  const auto r = rollins(truth, policies, h);
  const auto rows = static_cast<std::ptrdiff_t>(policies.size());
  const auto cols = static_cast<std::ptrdiff_t>(models.size());
  Eigen::MatrixXd out(rows, cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cell = 0; cell < rows * cols; ++cell) {
    const auto i = cell / cols;
    const auto j = cell % cols;
    out(i, j) = misfit_from_rollin(truth, *models[static_cast<std::size_t>(j)], r[static_cast<std::size_t>(i)].probs);
  }
  return out;
}

std::vector<double> v_explore_all(std::span<const Policy> policies, std::span<const TabularMDP* const> models) {
  std::vector<double> out(policies.size());
  const auto n = static_cast<std::ptrdiff_t>(policies.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = v_explore_one(policies[static_cast<std::size_t>(i)], models);
    } catch (...) {
#pragma omp critical(ne3_v_explore_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double nearest_distance(std::span<const double> points, std::size_t dim, std::span<const double> query) {
  if (query.size() != dim) throw IndexError("query has the wrong dimension");
  const auto n = static_cast<std::ptrdiff_t>(dim == 0 ? 0 : points.size() / dim);
  double best = std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(min : best) schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    best = std::min(best, squared_distance(points.data() + static_cast<std::size_t>(i) * dim, query.data(), dim));
  }
  return std::sqrt(best);
}

}  // namespace omp

int max_threads() {
#ifdef NE3_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef NE3_HAVE_OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace ne3::kernels

#pragma once

// Hot loops with two implementations each: a serial reference kept for
// equality tests and an OpenMP version used by default. Both produce
// identical results, because every parallel loop writes disjoint cells and the
// only reduction (min) is order-independent.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ne3/mdp.hpp"

namespace ne3::kernels {

namespace serial {
/// out(i, j) = W(pi_i, M_j, h).
Eigen::MatrixXd misfit_matrix(const TabularMDP& truth, std::span<const Policy> policies,
                              std::span<const TabularMDP* const> models, int h);
/// v_explore(pi_i, models) for every policy.
std::vector<double> v_explore_all(std::span<const Policy> policies, std::span<const TabularMDP* const> models);
/// Smallest Euclidean distance from `query` to the rows of a row-major
/// points matrix with `dim` columns; +inf when there are no rows.
double nearest_distance(std::span<const double> points, std::size_t dim, std::span<const double> query);
}  // namespace serial

namespace omp {
Eigen::MatrixXd misfit_matrix(const TabularMDP& truth, std::span<const Policy> policies,
                              std::span<const TabularMDP* const> models, int h);
std::vector<double> v_explore_all(std::span<const Policy> policies, std::span<const TabularMDP* const> models);
double nearest_distance(std::span<const double> points, std::size_t dim, std::span<const double> query);
}  // namespace omp

/// Dispatch to the OpenMP version when built with it.
#ifdef NE3_HAVE_OPENMP
using omp::misfit_matrix;
using omp::nearest_distance;
using omp::v_explore_all;
#else
using serial::misfit_matrix;
using serial::nearest_distance;
using serial::v_explore_all;
#endif

/// Worker count for the OpenMP kernels (1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace ne3::kernels

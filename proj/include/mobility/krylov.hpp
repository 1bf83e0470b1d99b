#pragma once

#include <functional>

#include <Eigen/Core>

#include "mobility/sparse_operator.hpp"

namespace mobility {

struct LinearSolveResult {
  Eigen::VectorXd x;
  double residual = 0.0;  // true ||b - A x||
  int iterations = 0;
  bool converged = false;
};

using LinearMap = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// MINRES (Paige-Saunders) for symmetric, possibly indefinite A. Stops when
/// the residual estimate drops below `tol` (absolute), then reports the true
/// residual.
LinearSolveResult minres(const LinearMap& apply, const Eigen::VectorXd& b, double tol,
                         int max_iterations);

/// Solves (H - z) x = e_y on the active coordinates of `op` and returns the
/// diagonal entry x_y = (H - z)^{-1}_{yy}. Throws ConvergenceError when the
/// residual stays above `tol`.
double green_diagonal(const SparseSymOperator& op, double z, Vertex y, double tol = 1e-10,
                      int max_iterations = 5000);

}  // namespace mobility

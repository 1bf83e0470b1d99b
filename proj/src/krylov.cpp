#include "mobility/krylov.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "mobility/errors.hpp"

namespace mobility {

LinearSolveResult minres(const LinearMap& apply, const Eigen::VectorXd& b, double tol,
                         int max_iterations) {
  const Eigen::Index n = b.size();
  LinearSolveResult out;
  out.x = Eigen::VectorXd::Zero(n);
  const double beta1 = b.norm();
  if (beta1 == 0.0) {
    out.converged = true;
    return out;
  }

  Eigen::VectorXd r1 = b, r2 = b, y = b, v(n), w = Eigen::VectorXd::Zero(n),
                  w1(n), w2 = Eigen::VectorXd::Zero(n);
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  constexpr double tiny = std::numeric_limits<double>::epsilon();

  int it = 0;
  while (it < max_iterations) {
    ++it;
    v = y / beta;
    apply(v, y);
    if (it >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    oldb = beta;
    beta = r2.norm();

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), tiny);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    out.x += phi * w;

    if (phibar <= tol || beta < tiny) break;
  }

  Eigen::VectorXd ax(n);
  apply(out.x, ax);
  out.residual = (b - ax).norm();
  out.iterations = it;
  out.converged = out.residual <= tol;
  return out;
}

double green_diagonal(const SparseSymOperator& op, double z, Vertex y, double tol,
                      int max_iterations) {
  if (y < 0 || y >= op.rows()) throw ParameterError("green_diagonal: vertex out of range");
  if (!op.active(y)) throw ParameterError("green_diagonal: vertex is masked");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(op.rows());
  rhs[y] = 1.0;
  auto shifted = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    op.apply(in, out);
    out -= z * in;
    op.project(out);
  };
  // The recursive residual drifts from the true one by rounding; refine on
  // the true residual until the target is met or progress stalls.
  auto result = minres(shifted, rhs, 0.5 * tol, max_iterations);
  Eigen::VectorXd ax(op.rows());
  for (int round = 0; round < 4 && result.residual > tol; ++round) {
    shifted(result.x, ax);
    const Eigen::VectorXd r = rhs - ax;
    const auto corr = minres(shifted, r, 0.5 * tol, max_iterations);
    const Eigen::VectorXd x = result.x + corr.x;
    shifted(x, ax);
    const double res = (rhs - ax).norm();
    if (!(res < result.residual)) break;
    result.x = x;
    result.residual = res;
  }
  if (result.residual > tol) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "green_diagonal: MINRES residual %.3e above tolerance %.3e",
                  result.residual, tol);
    throw ConvergenceError(msg, result.residual);
  }
  return result.x[y];
}

}  // namespace mobility

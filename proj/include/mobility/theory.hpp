#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "mobility/errors.hpp"

namespace mobility::theory {

/// Lambda(alpha) = alpha / sqrt(alpha - 1), the eigenvalue attached to a
/// vertex of normalized degree alpha >= 2.
template <class Scalar>
Scalar lambda_of_alpha(Scalar alpha) {
  using std::sqrt;
  if (!(alpha >= Scalar(2))) throw DomainError("lambda_of_alpha: alpha must be >= 2");
  return alpha / sqrt(alpha - Scalar(1));
}

/// Inverse of lambda_of_alpha on [2, inf).
template <class Scalar>
Scalar alpha_of_lambda(Scalar lam) {
  using std::sqrt;
  if (!(lam >= Scalar(2))) throw DomainError("alpha_of_lambda: lambda must be >= 2");
  const Scalar sq = lam * lam;
  return sq / Scalar(2) * (Scalar(1) + sqrt(std::max(Scalar(0), Scalar(1) - Scalar(4) / sq)));
}

inline double b_star() { return 1.0 / (2.0 * std::numbers::ln2 - 1.0); }

/// theta_b(alpha) = 1 - b (alpha log alpha - alpha + 1), the exponent of the
/// count of vertices with normalized degree >= alpha when d = b log n.
template <class Scalar>
Scalar theta_b(Scalar alpha, Scalar b) {
  using std::log;
  if (!(alpha >= Scalar(2))) throw DomainError("theta_b: alpha must be >= 2");
  if (!(b >= Scalar(0))) throw DomainError("theta_b: b must be >= 0");
  return Scalar(1) - b * (alpha * log(alpha) - alpha + Scalar(1));
}

/// Density-of-states exponent: 1 inside (-2, 2), theta_b(Lambda^{-1}(|l|))_+ outside.
template <class Scalar>
Scalar rho_b(Scalar lam, Scalar b) {
  using std::abs;
  const Scalar a = abs(lam);
  if (a < Scalar(2)) return Scalar(1);
  return std::max(Scalar(0), theta_b(alpha_of_lambda(a), b));
}

struct PhaseConstants {
  double b = 0.0;
  double b_star = 0.0;
  double alpha_max = 0.0;
  double lambda_max = 0.0;
};

/// alpha_max(b) solves theta_b = 0 (bisection to 1e-12); lambda_max = Lambda(alpha_max).
/// Requires 0 < b <= b_star.
PhaseConstants phase_constants(double b);

/// Upper tail P(Binomial(trials, p) >= k), summed exactly in log space with
/// compensated summation. `trials` is real so that astronomically large n
/// stay representable.
double binomial_upper_tail(double trials, double p, double k);

/// alpha^*(mu) = max(k^* / d, 2 + kappa) with k^* the smallest integer such
/// that P(Binomial(n - 1, d / n) >= k^*) <= n^{mu - 1}.
double alpha_star_exact(double mu, double n, double d, double kappa);

/// (1 - mu) t / log t, the leading-order alpha^* for t = log n / d > e.
double alpha_star_asymptotic(double mu, double t);

/// Bennett's function h(a) = (1 + a) log(1 + a) - a.
double bennett_h(double a);

struct TailBounds {
  double upper = 0.0;  // exp(-mu h(a)) bounds P(B - mu >= a mu)
  double lower = 0.0;  // exp(-mu a^2 / 2) bounds P(B - mu <= -a mu)
};
TailBounds bennett_tails(double mu, double n, double a);

/// (1 - M / t)^{-1}_{1j} for the adjacency matrix M of the half-line,
/// t * (2 / (t + sqrt(t^2 - 4)))^j for t > 2.
double halfline_resolvent(double t, int j);

}  // namespace mobility::theory

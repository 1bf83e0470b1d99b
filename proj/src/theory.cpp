#include "mobility/theory.hpp"

#include <algorithm>
#include <limits>

namespace mobility::theory {

PhaseConstants phase_constants(double b) {
  const double bs = b_star();
  if (!(b > 0.0)) throw DomainError("phase_constants: b must be > 0");
  if (b > bs) throw DomainError("phase_constants: b exceeds b_star, alpha_max undefined");

  auto f = [b](double a) { return theta_b(a, b); };
  double lo = 2.0;
  double hi = 10.0 * std::max(1.0, 1.0 / b);
  if (f(hi) > 0.0) hi *= 10.0;  // widen once
  if (f(hi) > 0.0) throw DomainError("phase_constants: bisection bracket failed");
  if (f(lo) <= 0.0) {
    hi = lo;  // b == b_star
  }
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  PhaseConstants pc;
  pc.b = b;
  pc.b_star = bs;
  pc.alpha_max = 0.5 * (lo + hi);
  pc.lambda_max = lambda_of_alpha(pc.alpha_max);
  return pc;
}

namespace {

// log C(trials, k). lgamma differences cancel catastrophically once trials
// is large, so the falling factorial is summed directly when it is short.
double log_choose(double trials, double k) {
  const double m = std::min(k, trials - k);
  if (trials > 1e5 && m <= 1e5) {
    double s = 0.0;
    for (double j = 0; j < m; ++j) s += std::log(trials - j);
    return s - std::lgamma(m + 1.0);
  }
  return std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
}

double log_binomial_pmf(double trials, double p, double k) {
  return log_choose(trials, k) + k * std::log(p) + (trials - k) * std::log1p(-p);
}

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Sum of pmf over [first, last] walking away from the mode, stopping once
// terms no longer change the sum. Successive terms follow the pmf ratio.
double sum_away_from_mode(double trials, double p, double first, double last, int direction) {
  Kahan acc;
  double k = direction > 0 ? first : last;
  const double stop = direction > 0 ? last : first;
  const double odds = p / (1.0 - p);
  double log_term = log_binomial_pmf(trials, p, k);
  for (;; k += direction) {
    if (direction > 0 ? k > stop : k < stop) break;
    const double term = std::exp(log_term);
    acc.add(term);
    if (term < acc.sum * 1e-18 || term == 0.0) {
      if (acc.sum > 0.0 || term == 0.0) break;
    }
    log_term += direction > 0 ? std::log((trials - k) / (k + 1.0) * odds)
                              : std::log(k / (trials - k + 1.0) / odds);
  }
  return acc.sum;
}

}  // namespace

double binomial_upper_tail(double trials, double p, double k) {
  if (k <= 0.0) return 1.0;
  if (k > trials) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double mode = std::floor((trials + 1.0) * p);
  if (k > mode) return std::min(1.0, sum_away_from_mode(trials, p, k, trials, +1));
  // Complement of the lower tail [0, k - 1], also summed away from the mode.
  const double lower = sum_away_from_mode(trials, p, 0.0, k - 1.0, -1);
  return std::clamp(1.0 - lower, 0.0, 1.0);
}

double alpha_star_exact(double mu, double n, double d, double kappa) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw ParameterError("alpha_star_exact: mu must be in [0, 1]");
  if (!(d > 0.0 && d <= n)) throw ParameterError("alpha_star_exact: require 0 < d <= n");
  if (!(kappa > 0.0 && kappa < 1.0))
    throw ParameterError("alpha_star_exact: kappa must be in (0, 1)");
  const double trials = n - 1.0;
  const double p = d / n;
  const double threshold = std::exp((mu - 1.0) * std::log(n));
  auto tail = [&](double k) { return binomial_upper_tail(trials, p, k); };

  double k = std::max(0.0, std::floor(trials * p));
  while (tail(k) > threshold) k = std::max(k + 1.0, std::ceil(k * 1.05));
  // k satisfies the condition; back off to the smallest integer that does.
  double lo = 0.0, hi = k;
  while (hi - lo > 1.0) {
    const double mid = std::floor(0.5 * (lo + hi));
    (tail(mid) <= threshold ? hi : lo) = mid;
  }
  if (tail(lo) <= threshold) hi = lo;
  return std::max(hi / d, 2.0 + kappa);
}

double alpha_star_asymptotic(double mu, double t) {
  if (!(t > std::numbers::e)) throw DomainError("alpha_star_asymptotic: t must exceed e");
  return (1.0 - mu) * t / std::log(t);
}

double bennett_h(double a) {
  if (!(a >= 0.0)) throw DomainError("bennett_h: a must be >= 0");
  return (1.0 + a) * std::log1p(a) - a;
}

TailBounds bennett_tails(double mu, double n, double a) {
  if (!(a >= 0.0)) throw DomainError("bennett_tails: a must be >= 0");
  if (!(mu >= 0.0 && mu <= n)) throw DomainError("bennett_tails: require 0 <= mu <= n");
  return {std::exp(-mu * bennett_h(a)), std::exp(-mu * a * a / 2.0)};
}

double halfline_resolvent(double t, int j) {
  if (!(t > 2.0)) throw DomainError("halfline_resolvent: t must be > 2");
  if (j < 1) throw DomainError("halfline_resolvent: j must be >= 1");
  const double gamma = 2.0 / (t + std::sqrt(t * t - 4.0));
  return t * std::pow(gamma, j);
}

}  // namespace mobility::theory

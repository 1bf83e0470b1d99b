#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "mobility/graph.hpp"
#include "mobility/rng.hpp"
#include "mobility/sparse_operator.hpp"

namespace mobility {

/// 1/t on [1/T, T], -t + T + 1/T elsewhere. Requires T > 1.
double iota(double t, double T);

/// T = 10 max(sqrt(log n / d), 1 / kappa).
double default_iota_threshold(double n, double d, double kappa);

/// r = floor((eta / 2) log n / log d) - 1, clamped to >= 1.
int default_cavity_depth(double n, double d, double eta);

/// [Lambda(alpha*) + kappa / 4, sqrt(d) / 2]; may be empty at small n.
struct SpectralWindow {
  double low = 0.0;
  double high = 0.0;
  bool contains(double z) const { return z >= low && z <= high; }
  bool empty() const { return !(low <= high); }
};
SpectralWindow spectral_window(double alpha_star, double kappa, double d);

/// Robust vertices of B_r(b): those in S_r(b), then recursively those with
/// at least d/2 robust children S_1^+(x) = S_1(x) cap S_{i+1}(b).
VertexSet robust_set(const Graph& g, Vertex b, int r, double d);

struct Frequency {
  double value = 0.0;
  double ci_half_width = 0.0;  // 95% normal approximation
  std::int64_t trials = 0;
};

/// Fraction of Poisson(d) Galton-Watson trees of depth r whose root is
/// robust. Trial i uses derive_seed(seed, "gw-robust", i); children are
/// generated lazily and evaluation stops as soon as the outcome is fixed.
Frequency gw_robust_prob(double d, int r, std::int64_t trials, std::uint64_t seed, int jobs = 1);

/// A vertex set X determines V^{(X)} = {y not in X : |S_1(y) \ X| / d >= alpha*}.
VertexSet large_degree_set(const Graph& g, double d, double alpha_star, const VertexSet& removed);

struct CavityState {
  Vertex root = 0;
  int r = 0;
  double z = 0.0;
  double T = 0.0;
  std::map<Vertex, double> g;         // x in B_r(b) \ {b}
  std::map<Vertex, int> depth;        // depth of each x in g
  std::map<Vertex, double> boundary;  // G_yy(r, z) for children of S_r(b)
};

/// Fills g_x inward from the given boundary values. Children of S_r(b)
/// absent from `boundary` are skipped (they are the excluded V^{(B_r(b))}).
/// Requires B_r(b) to be a tree.
CavityState cavity_from_boundary(const Graph& g, double d, Vertex b, int r, double z, double T,
                                 const std::map<Vertex, double>& boundary);

struct CavityOptions {
  double tol = 1e-10;
  int max_iterations = 5000;
  int jobs = 1;
  double spectrum_margin = 1e-6;
  std::uint64_t seed = 0;
};

/// g_x(z) for x in B_r(b) \ {b} with exact boundary values
/// G_yy(r, z) = (H(r) - z)^{-1}_yy, H(r) = H^{(B_r(b) cup V^{(B_r(b))})}.
/// Throws StructureError when B_r(b) is not a tree and DomainError when z
/// lies within the margin of a computed eigenvalue of H(r).
CavityState cavity_recursion(const Graph& g, double d, double alpha_star, Vertex b, int r,
                             double z, double T, const CavityOptions& opt = {});

void write_cavity_csv(std::ostream& out, const CavityState& state);

struct ConcentrationEstimate {
  double q_hat = 0.0;
  double L = 0.0;
  std::int64_t samples = 0;
  double ci_half_width = 0.0;
};

using Sampler = std::function<double(Philox&)>;

/// sup_t of the empirical mass in [t - L, t + L] by a sliding window over the
/// sorted samples.
ConcentrationEstimate levy_q_from_samples(std::vector<double> samples, double L);

/// Draws `samples` values from `sampler` with Philox(seed) and estimates Q.
ConcentrationEstimate levy_q_estimate(const Sampler& sampler, double L, std::int64_t samples,
                                      std::uint64_t seed);

struct KestenResult {
  ConcentrationEstimate term;  // Q(X, L)
  ConcentrationEstimate sum;   // Q(X_1 + ... + X_n, L)
  double rhs_factor = 0.0;     // Q(X, L) / sqrt(n)
  double ratio = 0.0;          // Q(sum) sqrt(n) / Q(X)
};

/// Throws ContractError when Q(X, L) is not compatible with <= 1/2 within its
/// confidence half-width.
KestenResult kesten_check(const Sampler& sampler, int n_terms, double L, std::int64_t samples,
                          std::uint64_t seed);

struct SpacingStats {
  bool empty = true;  // fewer than two eigenvalues above `lower`
  std::int64_t count = 0;
  double min_gap = 0.0;
  double median_gap = 0.0;
  std::vector<std::pair<double, double>> gaps;  // (lambda_i, lambda_i - lambda_{i+1})
};

/// Consecutive gaps among the eigenvalues >= lower; input sorted descending.
SpacingStats spacing_stats(const std::vector<double>& eigs, double lower);

void write_gaps_csv(std::ostream& out, const SpacingStats& stats);

}  // namespace mobility

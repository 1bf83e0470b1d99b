#include "mobility/spacing.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mobility/eigensolvers.hpp"
#include "mobility/errors.hpp"
#include "mobility/io.hpp"
#include "mobility/krylov.hpp"
#include "mobility/localization.hpp"
#include "mobility/parallel.hpp"
#include "mobility/theory.hpp"

namespace mobility {

double iota(double t, double T) {
  if (!(T > 1.0)) throw ParameterError("iota: T must be > 1");
  if (t >= 1.0 / T && t <= T) return 1.0 / t;
  return -t + T + 1.0 / T;
}

double default_iota_threshold(double n, double d, double kappa) {
  if (!(d > 0.0) || !(kappa > 0.0)) throw ParameterError("iota threshold: require d, kappa > 0");
  return 10.0 * std::max(std::sqrt(std::log(n) / d), 1.0 / kappa);
}

int default_cavity_depth(double n, double d, double eta) {
  if (!(d > 1.0)) return 1;
  const double r = std::floor(eta / 2.0 * std::log(n) / std::log(d)) - 1.0;
  return std::max(1, static_cast<int>(r));
}

SpectralWindow spectral_window(double alpha_star, double kappa, double d) {
  return {theory::lambda_of_alpha(alpha_star) + kappa / 4.0, std::sqrt(d) / 2.0};
}

VertexSet robust_set(const Graph& g, Vertex b, int r, double d) {
  if (b < 0 || b >= g.size()) throw ParameterError("robust_set: vertex out of range");
  if (r < 0) throw ParameterError("robust_set: r must be >= 0");
  const auto sph = spheres(g, b, r);
  const auto dist = bfs_distances(g, b, r);
  std::vector<std::uint8_t> robust(static_cast<std::size_t>(g.size()), 0);
  for (Vertex x : sph.back()) robust[x] = 1;
  for (int i = r - 1; i >= 0; --i)
    for (Vertex x : sph[static_cast<std::size_t>(i)]) {
      int count = 0;
      for (Vertex y : g.neighbors(x))
        if (dist[y] == i + 1 && robust[y]) ++count;
      robust[x] = count >= d / 2.0;
    }
  VertexSet out;
  for (Vertex x = 0; x < g.size(); ++x)
    if (robust[x]) out.push_back(x);
  return out;
}

namespace {

// Whether a vertex `levels` generations above the boundary is robust.
bool gw_robust(Philox& rng, double d, int need, int levels) {
  if (levels == 0) return true;
  const auto children = static_cast<int>(rng.poisson(d));
  if (levels == 1) return children >= need;
  if (children < need) return false;
  int found = 0;
  for (int c = 0; c < children; ++c) {
    if (gw_robust(rng, d, need, levels - 1)) ++found;
    if (found >= need) return true;
    if (found + (children - c - 1) < need) return false;
  }
  return found >= need;
}

}  // namespace

Frequency gw_robust_prob(double d, int r, std::int64_t trials, std::uint64_t seed, int jobs) {
  if (!(d > 0.0)) throw ParameterError("gw_robust_prob: d must be > 0");
  if (r < 0) throw ParameterError("gw_robust_prob: r must be >= 0");
  if (trials < 1) throw ParameterError("gw_robust_prob: trials must be >= 1");
  const int need = static_cast<int>(std::ceil(d / 2.0));
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(trials), 0);
  parallel_for(hit.size(), jobs, [&](std::size_t i) {
    Philox rng(derive_seed(seed, "gw-robust", i));
    hit[i] = gw_robust(rng, d, need, r);
  });
  std::int64_t count = 0;
  for (auto h : hit) count += h;
  Frequency f;
  f.trials = trials;
  f.value = static_cast<double>(count) / static_cast<double>(trials);
  f.ci_half_width = 1.96 * std::sqrt(f.value * (1.0 - f.value) / static_cast<double>(trials));
  return f;
}

VertexSet large_degree_set(const Graph& g, double d, double alpha_star, const VertexSet& removed) {
  std::vector<std::uint8_t> out_mask(static_cast<std::size_t>(g.size()), 0);
  for (Vertex v : removed) out_mask[v] = 1;
  VertexSet out;
  for (Vertex y = 0; y < g.size(); ++y) {
    if (out_mask[y]) continue;
    int deg = 0;
    for (Vertex z : g.neighbors(y)) deg += !out_mask[z];
    if (deg / d >= alpha_star) out.push_back(y);
  }
  return out;
}

namespace {

struct BallLayers {
  std::vector<VertexSet> spheres;          // S_0 .. S_r
  std::vector<std::int32_t> dist;          // bounded by r + 1
};

BallLayers layers(const Graph& g, Vertex b, int r) {
  if (b < 0 || b >= g.size()) throw ParameterError("cavity: vertex out of range");
  if (r < 1) throw ParameterError("cavity: r must be >= 1");
  if (!is_tree_ball(g, b, r))
    throw StructureError("cavity: B_" + std::to_string(r) + "(" + std::to_string(b) +
                         ") is not a tree");
  return {spheres(g, b, r), bfs_distances(g, b, r + 1)};
}

void fill_inward(const Graph& g, double d, const BallLayers& L, CavityState& s) {
  for (int i = s.r; i >= 1; --i)
    for (Vertex x : L.spheres[static_cast<std::size_t>(i)]) {
      double acc = 0.0;
      for (Vertex y : g.neighbors(x)) {
        if (L.dist[y] != i + 1) continue;
        if (i == s.r) {
          auto it = s.boundary.find(y);
          if (it != s.boundary.end()) acc += it->second;
        } else {
          acc += s.g.at(y);
        }
      }
      s.g[x] = -iota(s.z + acc / d, s.T);
      s.depth[x] = i;
    }
}

}  // namespace

CavityState cavity_from_boundary(const Graph& g, double d, Vertex b, int r, double z, double T,
                                 const std::map<Vertex, double>& boundary) {
  if (!(d > 0.0)) throw ParameterError("cavity: d must be > 0");
  const BallLayers L = layers(g, b, r);
  CavityState s;
  s.root = b;
  s.r = r;
  s.z = z;
  s.T = T;
  s.boundary = boundary;
  fill_inward(g, d, L, s);
  return s;
}

CavityState cavity_recursion(const Graph& g, double d, double alpha_star, Vertex b, int r,
                             double z, double T, const CavityOptions& opt) {
  if (!(d > 0.0)) throw ParameterError("cavity: d must be > 0");
  if (!(T > 1.0)) throw ParameterError("cavity: T must be > 1");
  const BallLayers L = layers(g, b, r);

  const VertexSet inner = ball(g, b, r);
  const VertexSet excluded = large_degree_set(g, d, alpha_star, inner);
  const SparseSymOperator Hr = build_operator(g, d, set_union(inner, excluded));

  std::vector<Vertex> targets;
  for (Vertex x : L.spheres.back())
    for (Vertex y : g.neighbors(x))
      if (L.dist[y] == r + 1 && !contains(excluded, y)) targets.push_back(y);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  // z must stay away from the spectrum of H(r): dense check on small
  // problems, extremal eigenvalues otherwise.
  if (!targets.empty()) {
    Eigen::VectorXd eig;
    if (Hr.active_count() <= static_cast<Eigen::Index>(kDenseBallLimit)) {
      VertexSet ids;
      eig = dense_eigenvalues(Hr.to_dense_active(ids));
    } else {
      LanczosOptions lo;
      lo.k = static_cast<int>(std::min<Eigen::Index>(6, Hr.active_count()));
      lo.tol = 1e-8;
      lo.seed = opt.seed;
      lo.max_iterations = 20000;
      const auto pairs = lanczos_topk(Hr, lo);
      eig.resize(static_cast<Eigen::Index>(pairs.size()));
      for (std::size_t i = 0; i < pairs.size(); ++i) eig[static_cast<Eigen::Index>(i)] = pairs[i].value;
    }
    const double gap = (eig.array() - z).abs().minCoeff();
    if (gap < opt.spectrum_margin)
      throw DomainError("cavity: z = " + io::format_double(z) + " within " +
                        io::format_double(gap) + " of the spectrum of H(r)");
  }

  std::vector<double> values(targets.size());
  parallel_for(targets.size(), opt.jobs, [&](std::size_t i) {
    values[i] = green_diagonal(Hr, z, targets[i], opt.tol, opt.max_iterations);
  });

  CavityState s;
  s.root = b;
  s.r = r;
  s.z = z;
  s.T = T;
  for (std::size_t i = 0; i < targets.size(); ++i) s.boundary[targets[i]] = values[i];
  fill_inward(g, d, L, s);
  return s;
}

void write_cavity_csv(std::ostream& out, const CavityState& state) {
  out << "vertex,depth,g_value\n";
  for (const auto& [x, value] : state.g)
    out << x << ',' << state.depth.at(x) << ',' << io::format_double(value) << '\n';
}

ConcentrationEstimate levy_q_from_samples(std::vector<double> samples, double L) {
  if (!(L > 0.0)) throw ParameterError("levy_q: L must be > 0");
  ConcentrationEstimate est;
  est.L = L;
  est.samples = static_cast<std::int64_t>(samples.size());
  if (samples.empty()) return est;
  std::sort(samples.begin(), samples.end());
  std::size_t best = 0;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < samples.size(); ++lo) {
    if (hi < lo) hi = lo;
    while (hi + 1 < samples.size() && samples[hi + 1] <= samples[lo] + 2.0 * L) ++hi;
    best = std::max(best, hi - lo + 1);
  }
  const double n = static_cast<double>(samples.size());
  est.q_hat = static_cast<double>(best) / n;
  est.ci_half_width = 1.96 * std::sqrt(est.q_hat * (1.0 - est.q_hat) / n);
  return est;
}

ConcentrationEstimate levy_q_estimate(const Sampler& sampler, double L, std::int64_t samples,
                                      std::uint64_t seed) {
  if (samples < 100) throw ParameterError("levy_q: at least 100 samples required");
  Philox rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(samples));
  for (double& x : xs) x = sampler(rng);
  return levy_q_from_samples(std::move(xs), L);
}

KestenResult kesten_check(const Sampler& sampler, int n_terms, double L, std::int64_t samples,
                          std::uint64_t seed) {
  if (n_terms < 1) throw ParameterError("kesten_check: n_terms must be >= 1");
  if (samples < 100) throw ParameterError("kesten_check: at least 100 samples required");
  KestenResult out;
  {
    Philox rng(seed, 1);
    std::vector<double> xs(static_cast<std::size_t>(samples));
    for (double& x : xs) x = sampler(rng);
    out.term = levy_q_from_samples(std::move(xs), L);
  }
  if (out.term.q_hat - out.term.ci_half_width > 0.5)
    throw ContractError("kesten_check: Q(X, L) = " + io::format_double(out.term.q_hat) +
                        " exceeds 1/2");
  {
    Philox rng(seed, 2);
    std::vector<double> sums(static_cast<std::size_t>(samples));
    for (double& s : sums) {
      double acc = 0.0;
      for (int i = 0; i < n_terms; ++i) acc += sampler(rng);
      s = acc;
    }
    out.sum = levy_q_from_samples(std::move(sums), L);
  }
  const double root = std::sqrt(static_cast<double>(n_terms));
  out.rhs_factor = out.term.q_hat / root;
  out.ratio = out.term.q_hat > 0.0 ? out.sum.q_hat * root / out.term.q_hat : 0.0;
  return out;
}

SpacingStats spacing_stats(const std::vector<double>& eigs, double lower) {
  if (!std::is_sorted(eigs.begin(), eigs.end(), std::greater<>()))
    throw ParameterError("spacing_stats: eigenvalues must be sorted descending");
  SpacingStats st;
  std::vector<double> above;
  for (double e : eigs)
    if (e >= lower) above.push_back(e);
  st.count = static_cast<std::int64_t>(above.size());
  if (above.size() < 2) return st;
  st.empty = false;
  std::vector<double> gaps;
  for (std::size_t i = 0; i + 1 < above.size(); ++i) {
    gaps.push_back(above[i] - above[i + 1]);
    st.gaps.emplace_back(above[i], gaps.back());
  }
  std::sort(gaps.begin(), gaps.end());
  st.min_gap = gaps.front();
  const std::size_t m = gaps.size();
  st.median_gap = m % 2 ? gaps[m / 2] : 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]);
  return st;
}

void write_gaps_csv(std::ostream& out, const SpacingStats& stats) {
  out << "lambda_i,gap_i\n";
  for (const auto& [lam, gap] : stats.gaps)
    out << io::format_double(lam) << ',' << io::format_double(gap) << '\n';
}

}  // namespace mobility

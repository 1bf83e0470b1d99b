#include "mobility/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mobility/errors.hpp"
#include "mobility/io.hpp"
#include "mobility/theory.hpp"

namespace mobility {

ProfileCoeffs profile_coeffs(double alpha, int r) {
  if (!(alpha > 2.0)) throw DomainError("profile_coeffs: alpha must be > 2");
  if (r < 2) throw DomainError("profile_coeffs: r must be >= 2");
  ProfileCoeffs p;
  p.alpha = alpha;
  p.r = r;
  p.u.resize(static_cast<std::size_t>(r));
  // Unnormalized with u_0 = 1, then rescale.
  const double ratio = 1.0 / std::sqrt(alpha - 1.0);
  p.u[0] = 1.0;
  p.u[1] = std::sqrt(alpha / (alpha - 1.0));
  for (int i = 2; i < r; ++i) p.u[i] = p.u[i - 1] * ratio;
  double sq = 0.0;
  for (double v : p.u) sq += v * v;
  const double norm = std::sqrt(sq);
  for (double& v : p.u) v /= norm;
  return p;
}

int default_depth(double n, double d) {
  if (!(d > 1.0)) return 2;
  return std::max(2, static_cast<int>(std::floor(std::log(n) / (6.0 * std::log(d)))));
}

Eigen::VectorXd build_v_r(const Graph& g, Vertex x, int r, double alpha_x) {
  if (x < 0 || x >= g.size()) throw ParameterError("build_v_r: vertex out of range");
  if (r < 1) throw ParameterError("build_v_r: r must be >= 1");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(g.size());
  if (r == 1) {
    v[x] = 1.0;
    return v;
  }
  const auto sph = spheres(g, x, r - 1);
  for (int i = 0; i < r; ++i)
    if (sph[static_cast<std::size_t>(i)].empty())
      throw StructureError("build_v_r: sphere S_" + std::to_string(i) + " is empty");
  const ProfileCoeffs p = profile_coeffs(alpha_x, r);
  for (int i = 0; i < r; ++i) {
    const auto& s = sph[static_cast<std::size_t>(i)];
    const double value = p.u[static_cast<std::size_t>(i)] / std::sqrt(static_cast<double>(s.size()));
    for (Vertex y : s) v[y] = value;
  }
  return v;
}

namespace {

// Largest eigenpairs of a masked operator, dense on the active block when it
// is small.
std::vector<EigenPair> top_pairs(const SparseSymOperator& op, int k, double tol,
                                 std::uint64_t seed, int max_iterations) {
  const Eigen::Index active = op.active_count();
  if (active == 0) throw ParameterError("no active coordinates");
  k = static_cast<int>(std::min<Eigen::Index>(k, active));
  if (static_cast<std::size_t>(active) <= kDenseBallLimit) {
    VertexSet ids;
    const Eigen::MatrixXd block = op.to_dense_active(ids);
    const DenseSpectrum spec = dense_eigs(block);
    std::vector<EigenPair> out;
    for (int i = 0; i < k; ++i) {
      EigenPair p;
      p.value = spec.values[i];
      p.vector = Eigen::VectorXd::Zero(op.rows());
      for (std::size_t j = 0; j < ids.size(); ++j)
        p.vector[ids[j]] = spec.vectors(static_cast<Eigen::Index>(j), i);
      p.residual = residual_norm(op, p.value, p.vector);
      p.method = SolverMethod::dense;
      out.push_back(std::move(p));
    }
    return out;
  }
  LanczosOptions opt;
  opt.k = k;
  opt.which = Which::largest;
  opt.tol = tol;
  opt.seed = seed;
  opt.max_iterations = max_iterations;
  return lanczos_topk(op, opt);
}

}  // namespace

EigenPair build_w_r(const Graph& g, double d, Vertex x, int r, double tol, std::uint64_t seed) {
  if (x < 0 || x >= g.size()) throw ParameterError("build_w_r: vertex out of range");
  if (r < 0) throw ParameterError("build_w_r: r must be >= 0");
  const SparseSymOperator op = restrict_operator(g, d, ball(g, x, r));
  EigenPair p = top_pairs(op, 1, tol, seed, 0).front();
  if (p.vector[x] < 0.0) p.vector = -p.vector;
  return p;
}

VertexSets vertex_sets(const Eigen::VectorXd& alphas, double alpha_star, double kappa) {
  if (!(alpha_star >= 2.0)) throw ParameterError("vertex_sets: alpha_star must be >= 2");
  VertexSets out;
  const double threshold = theory::lambda_of_alpha(alpha_star) + kappa / 2.0;
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    if (alphas[i] < alpha_star) continue;
    out.V.push_back(static_cast<Vertex>(i));
    if (theory::lambda_of_alpha(alphas[i]) >= threshold) out.W.push_back(static_cast<Vertex>(i));
  }
  return out;
}

UxResult compute_u_x(const SparseSymOperator& H, const VertexSet& V, Vertex x,
                     const UxOptions& opt) {
  if (!contains(V, x)) throw ParameterError("compute_u_x: x is not in V");
  const SparseSymOperator op = build_operator(H.graph(), H.d(), set_difference(V, {x}));
  const int k = std::max(2, opt.k);
  auto pairs = top_pairs(op, k, opt.tol, opt.seed, opt.max_iterations);
  if (pairs.size() < 2) throw ParameterError("compute_u_x: fewer than two active coordinates");
  UxResult out;
  out.x = x;
  out.lambda = pairs[1].value;
  out.u = std::move(pairs[1].vector);
  if (out.u[x] < 0.0) out.u = -out.u;
  out.residual = pairs[1].residual;
  out.iterations = pairs[1].iterations;
  out.gap = pairs[0].value - out.lambda;
  if (pairs.size() > 2) out.gap = std::min(out.gap, out.lambda - pairs[2].value);
  out.degenerate = out.gap < kDegeneracyThreshold;
  return out;
}

std::vector<double> decay_profile(const Eigen::VectorXd& w, const Graph& g, Vertex x,
                                  int r_max) {
  if (w.size() != g.size()) throw ParameterError("decay_profile: length mismatch");
  if (r_max < 0) throw ParameterError("decay_profile: r_max must be >= 0");
  const auto dist = bfs_distances(g, x, r_max);
  std::vector<double> shell(static_cast<std::size_t>(r_max) + 1, 0.0);
  double far = 0.0;
  for (Vertex y = 0; y < g.size(); ++y) {
    const double m = w[y] * w[y];
    if (dist[y] < 0)
      far += m;
    else
      shell[static_cast<std::size_t>(dist[y])] += m;
  }
  std::vector<double> out(shell.size());
  double outside = far;
  for (int i = r_max; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = std::sqrt(outside);
    outside += shell[static_cast<std::size_t>(i)];
  }
  return out;
}

double decay_slope(const std::vector<double>& decay, int first, int last) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int i = std::max(0, first); i <= last && i < static_cast<int>(decay.size()); ++i) {
    const double v = decay[static_cast<std::size_t>(i)];
    if (!(v > 0.0)) continue;
    const double y = std::log(v);
    sx += i;
    sy += y;
    sxx += double(i) * i;
    sxy += i * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

namespace {

double expected_distance(const Eigen::VectorXd& w, const Graph& g, Vertex c) {
  const auto dist = bfs_distances(g, c);
  const double n = g.size();
  double acc = 0.0;
  for (Vertex y = 0; y < g.size(); ++y) acc += (dist[y] < 0 ? n : dist[y]) * w[y] * w[y];
  return acc;
}

VertexSet heuristic_candidates(const Eigen::VectorXd& w, const Graph& g) {
  std::vector<Vertex> order(static_cast<std::size_t>(g.size()));
  std::iota(order.begin(), order.end(), 0);
  const std::size_t top = std::min<std::size_t>(kLengthCandidates, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](Vertex a, Vertex b) {
                      const double ma = w[a] * w[a], mb = w[b] * w[b];
                      return ma != mb ? ma > mb : a < b;
                    });
  VertexSet out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top));
  Vertex hub = 0;
  for (Vertex y = 1; y < g.size(); ++y)
    if (g.degree(y) > g.degree(hub)) hub = y;
  out.push_back(hub);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

LocalizationLength localization_length(const Eigen::VectorXd& w, const Graph& g, LengthMode mode,
                                       const std::optional<VertexSet>& candidates) {
  if (w.size() != g.size()) throw ParameterError("localization_length: length mismatch");
  if (g.size() == 0) throw ParameterError("localization_length: empty graph");
  VertexSet pool;
  if (candidates) {
    pool = *candidates;
    for (Vertex c : pool)
      if (c < 0 || c >= g.size()) throw ParameterError("localization_length: bad candidate");
  } else if (mode == LengthMode::exact || (mode == LengthMode::automatic && g.size() <= 2000)) {
    pool.resize(static_cast<std::size_t>(g.size()));
    std::iota(pool.begin(), pool.end(), 0);
  } else {
    pool = heuristic_candidates(w, g);
  }
  if (pool.empty()) throw ParameterError("localization_length: no candidates");
  LocalizationLength best{std::numeric_limits<double>::infinity(), pool.front()};
  for (Vertex c : pool) {
    const double ell = expected_distance(w, g, c);
    if (ell < best.ell || (ell == best.ell && c < best.center)) best = {ell, c};
  }
  return best;
}

double ll_prediction(double lam) {
  const double a = std::abs(lam);
  if (!(a > 2.0)) throw DomainError("ll_prediction: |lambda| must exceed 2");
  return a / (2.0 * std::sqrt(a * a - 4.0));
}

std::string_view to_string(EigenClass c) {
  switch (c) {
    case EigenClass::localized:
      return "localized";
    case EigenClass::delocalized:
      return "delocalized";
    default:
      return "unclassified";
  }
}

LocalizationReport classify_eigenvector(const EigenPair& pair, const Graph& g, double d,
                                        const Eigen::VectorXd& alphas, const VertexSet& V,
                                        const ClassifyParams& params) {
  if (pair.vector.size() != g.size() || alphas.size() != g.size())
    throw ParameterError("classify_eigenvector: length mismatch");
  const Eigen::VectorXd w = pair.vector.normalized();
  LocalizationReport rep;
  rep.eigenvalue = pair.value;
  const double total = w.sum();
  rep.perron = params.perron || total * total / static_cast<double>(g.size()) >= kPerronOverlap;

  const auto ll = localization_length(w, g, params.length_mode);
  rep.center = ll.center;
  rep.ell = ll.ell;
  rep.alpha_center = alphas[rep.center];
  rep.center_mass = w[rep.center] * w[rep.center];
  rep.decay = decay_profile(w, g, rep.center, params.r);
  rep.sup_sq = w.array().square().maxCoeff();

  if (rep.alpha_center > 2.0) {
    try {
      rep.overlap_v = std::abs(w.dot(build_v_r(g, rep.center, params.r, rep.alpha_center)));
    } catch (const StructureError&) {
    }
  }
  if (params.compute_overlap_w)
    rep.overlap_w = std::abs(w.dot(build_w_r(g, d, rep.center, params.r).vector));

  const double a = std::abs(pair.value);
  if (rep.perron)
    rep.cls = EigenClass::unclassified;
  else if (a >= 2.0 + params.kappa && contains(V, rep.center))
    rep.cls = EigenClass::localized;
  else if (a <= 2.0 - params.kappa)
    rep.cls = EigenClass::delocalized;
  return rep;
}

std::vector<VertexMatch> match_eigenvalues(std::vector<double> eigenvalues,
                                           const VertexSet& vertices,
                                           const Eigen::VectorXd& alphas) {
  std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
  std::vector<Vertex> order;
  for (Vertex v : vertices) {
    if (v < 0 || v >= alphas.size()) throw ParameterError("match_eigenvalues: bad vertex");
    if (alphas[v] >= 2.0) order.push_back(v);
  }
  std::sort(order.begin(), order.end(), [&](Vertex a, Vertex b) {
    return alphas[a] != alphas[b] ? alphas[a] > alphas[b] : a < b;
  });
  std::vector<VertexMatch> out;
  const std::size_t count = std::min(eigenvalues.size(), order.size());
  for (std::size_t i = 0; i < count; ++i) {
    VertexMatch m;
    m.lambda = eigenvalues[i];
    m.vertex = order[i];
    m.alpha = alphas[m.vertex];
    m.predicted = theory::lambda_of_alpha(m.alpha);
    m.gap = std::abs(m.lambda - m.predicted);
    out.push_back(m);
  }
  return out;
}

nlohmann::json report_json(const LocalizationReport& r) {
  nlohmann::json j;
  j["lambda"] = r.eigenvalue;
  j["center"] = r.center;
  j["alpha_center"] = r.alpha_center;
  j["center_mass"] = r.center_mass;
  j["decay"] = r.decay;
  j["ell"] = r.ell;
  j["sup_sq"] = r.sup_sq;
  j["overlap_v"] = r.overlap_v ? nlohmann::json(*r.overlap_v) : nlohmann::json(nullptr);
  j["overlap_w"] = r.overlap_w ? nlohmann::json(*r.overlap_w) : nlohmann::json(nullptr);
  j["class"] = std::string(to_string(r.cls));
  j["perron"] = r.perron;
  return j;
}

void write_reports_csv(std::ostream& out, const std::vector<LocalizationReport>& reports) {
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  out << "lambda,center,alpha_center,center_mass,ell,sup_sq,overlap_v,overlap_w,class\n";
  for (const auto& r : reports)
    out << io::format_double(r.eigenvalue) << ',' << r.center << ','
        << io::format_double(r.alpha_center) << ',' << io::format_double(r.center_mass) << ','
        << io::format_double(r.ell) << ',' << io::format_double(r.sup_sq) << ','
        << io::format_double(r.overlap_v.value_or(nan)) << ','
        << io::format_double(r.overlap_w.value_or(nan)) << ',' << to_string(r.cls) << '\n';
}

}  // namespace mobility

#include "mobility/phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mobility/errors.hpp"
#include "mobility/io.hpp"
#include "mobility/parallel.hpp"
#include "mobility/theory.hpp"

namespace mobility {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate(const PhaseConfig& c) {
  if (c.n < 3) throw ParameterError("phase: n must be >= 3");
  if (!(c.b > 0.0)) throw ParameterError("phase: b must be > 0");
  if (!(c.mu >= 0.0 && c.mu <= 1.0)) throw ParameterError("phase: mu must be in [0, 1]");
  if (!(c.kappa > 0.0 && c.kappa < 1.0)) throw ParameterError("phase: kappa must be in (0, 1)");
  if (c.k_top < 1) throw ParameterError("phase: k_top must be >= 1");
  if (c.bulk_samples < 0) throw ParameterError("phase: bulk_samples must be >= 0");
  if (!(c.tol > 0.0)) throw ParameterError("phase: tol must be > 0");
}

std::string_view to_string(ScanMode m) {
  switch (m) {
    case ScanMode::dense:
      return "dense";
    case ScanMode::lanczos:
      return "lanczos";
    default:
      return "automatic";
  }
}

}  // namespace

bool in_d_range(double n, double d) {
  const double ln = std::log(n);
  return d >= std::sqrt(ln) * std::log(ln) && d <= 3.0 * ln;
}

PhaseScan phase_scan(const PhaseConfig& config) {
  validate(config);
  const double d = config.b * std::log(static_cast<double>(config.n));
  const Graph g = generate(config.n, d, config.seed);
  return phase_scan(g, config);
}

PhaseScan phase_scan(const Graph& g, const PhaseConfig& config) {
  validate(config);
  if (g.size() != config.n) throw ParameterError("phase: graph size differs from n");
  PhaseScan s;
  s.config = config;
  const double n = config.n;
  s.d = config.b * std::log(n);
  s.d_range_warning = !in_d_range(n, s.d);
  s.r = config.r > 0 ? config.r : default_depth(n, s.d);
  s.alpha_star = theory::alpha_star_exact(config.mu, n, s.d, config.kappa);
  const Eigen::VectorXd alphas = normalized_degrees(g, s.d);
  s.sets = vertex_sets(alphas, s.alpha_star, config.kappa);
  {
    Eigen::Index arg = 0;
    s.max_alpha = alphas.maxCoeff(&arg);
    s.max_alpha_vertex = static_cast<Vertex>(arg);
  }
  s.diameter = diameter(g);

  const SparseSymOperator H = build_operator(g, s.d);
  const bool dense = config.mode == ScanMode::dense ||
                     (config.mode == ScanMode::automatic && g.size() <= kDenseLimit);
  s.method = dense ? SolverMethod::dense : SolverMethod::lanczos;
  const int k = std::min<int>(config.k_top, (config.n - 1) / 2);

  if (dense) {
    const DenseSpectrum spec = dense_eigs(H);
    const Eigen::Index m = spec.size();
    s.perron = spec.pair(0);
    for (Eigen::Index i = 1; i < m; ++i) s.eigenvalues.push_back(spec.values[i]);
    std::vector<Eigen::Index> picked;
    for (Eigen::Index i = 1; i <= k; ++i) picked.push_back(i);
    const Eigen::Index lo = k + 1, hi = m - k - 1;
    if (hi >= lo && config.bulk_samples > 0) {
      const Eigen::Index span = hi - lo + 1;
      const Eigen::Index count = std::min<Eigen::Index>(config.bulk_samples, span);
      for (Eigen::Index j = 0; j < count; ++j)
        picked.push_back(lo + static_cast<Eigen::Index>((j + 0.5) * static_cast<double>(span) /
                                                        static_cast<double>(count)));
    }
    for (Eigen::Index i = std::max<Eigen::Index>(m - k, k + 1); i < m; ++i) picked.push_back(i);
    std::sort(picked.begin(), picked.end());
    picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
    for (Eigen::Index i : picked) s.pairs.push_back(spec.pair(i));
  } else {
    LanczosOptions lo;
    lo.k = k + 1;
    lo.which = Which::largest;
    lo.tol = config.tol;
    lo.seed = derive_seed(config.seed, "phase-lanczos", 0);
    lo.max_iterations = config.max_iterations;
    auto top = lanczos_topk(H, lo);
    lo.k = k;
    lo.which = Which::smallest;
    lo.seed = derive_seed(config.seed, "phase-lanczos", 1);
    auto bottom = lanczos_topk(H, lo);
    s.perron = std::move(top.front());
    for (std::size_t i = 1; i < top.size(); ++i) s.pairs.push_back(std::move(top[i]));
    for (auto& p : bottom) s.pairs.push_back(std::move(p));
    for (const auto& p : s.pairs) s.eigenvalues.push_back(p.value);
  }
  if (s.perron.vector.sum() < 0.0) s.perron.vector = -s.perron.vector;
  for (std::size_t i = 0; i < static_cast<std::size_t>(k) && i < s.eigenvalues.size(); ++i)
    s.top_eigenvalues.push_back(s.eigenvalues[i]);

  ClassifyParams cp;
  cp.kappa = config.kappa;
  cp.r = s.r;
  {
    ClassifyParams pp = cp;
    pp.perron = true;
    s.perron_report = classify_eigenvector(s.perron, g, s.d, alphas, s.sets.V, pp);
  }
  s.reports.resize(s.pairs.size());
  parallel_for(s.pairs.size(), config.jobs, [&](std::size_t i) {
    s.reports[i] = classify_eigenvector(s.pairs[i], g, s.d, alphas, s.sets.V, cp);
  });
  for (const auto& rep : s.reports) {
    PhasePoint p;
    p.b = config.b;
    p.n = config.n;
    p.seed = config.seed;
    p.lambda = rep.eigenvalue;
    p.ell = rep.ell;
    p.sup_sq = rep.sup_sq;
    p.cls = rep.cls;
    p.ell_pred = rep.cls == EigenClass::localized     ? ll_prediction(rep.eigenvalue)
                 : rep.cls == EigenClass::delocalized ? static_cast<double>(s.diameter)
                                                      : kNaN;
    s.points.push_back(p);
  }

  {
    std::vector<double> top_w(s.top_eigenvalues.begin(),
                              s.top_eigenvalues.begin() +
                                  static_cast<std::ptrdiff_t>(std::min(s.top_eigenvalues.size(),
                                                                       s.sets.W.size())));
    s.matches = match_eigenvalues(top_w, s.sets.W, alphas);
    std::vector<Vertex> order(static_cast<std::size_t>(g.size()));
    for (Vertex x = 0; x < g.size(); ++x) order[static_cast<std::size_t>(x)] = x;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](Vertex a, Vertex b) {
                        return alphas[a] != alphas[b] ? alphas[a] > alphas[b] : a < b;
                      });
    VertexSet top_vertices(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(top_vertices.begin(), top_vertices.end());
    s.top_matches = match_eigenvalues(s.top_eigenvalues, top_vertices, alphas);
  }

  for (double threshold : config.dos_grid) {
    DosCount c;
    c.threshold = threshold;
    if (dense) {
      c.exact = true;
      c.count = static_cast<double>(std::count_if(s.eigenvalues.begin(), s.eigenvalues.end(),
                                                  [&](double e) { return e >= threshold; }));
    } else {
      EigenCountOptions eo;
      eo.moments = config.kpm_moments;
      eo.probes = config.kpm_probes;
      eo.seed = derive_seed(config.seed, "phase-kpm", 0);
      const double upper = s.perron.value + 1.0;
      c.count = std::max(0.0, estimate_eigen_count(H, threshold, upper, eo) - 1.0);
    }
    s.dos.push_back(c);
  }
  return s;
}

void write_phase_points_csv(std::ostream& out, const std::vector<PhasePoint>& points) {
  out << "b,n,seed,lambda,ell,ell_pred,sup_sq,class\n";
  for (const auto& p : points)
    out << io::format_double(p.b) << ',' << p.n << ',' << p.seed << ','
        << io::format_double(p.lambda) << ',' << io::format_double(p.ell) << ','
        << io::format_double(p.ell_pred) << ',' << io::format_double(p.sup_sq) << ','
        << to_string(p.cls) << '\n';
}

void write_ll_curve_csv(std::ostream& out, const std::vector<PhasePoint>& points) {
  out << "lambda,ell,ell_pred\n";
  for (const auto& p : points)
    out << io::format_double(p.lambda) << ',' << io::format_double(p.ell) << ','
        << io::format_double(p.ell_pred) << '\n';
}

WignerResult deformed_wigner(const std::vector<double>& lambdas, double t, std::uint64_t seed) {
  if (lambdas.size() < 2) throw ParameterError("deformed_wigner: need at least two diagonal entries");
  if (!(t >= 0.0)) throw ParameterError("deformed_wigner: t must be >= 0");
  const auto m = static_cast<Eigen::Index>(lambdas.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  Philox rng(seed);
  const double off = std::sqrt(t / static_cast<double>(m));
  const double diag = std::sqrt(2.0 * t / static_cast<double>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    M(i, i) = lambdas[static_cast<std::size_t>(i)] + diag * rng.normal();
    for (Eigen::Index j = i + 1; j < m; ++j) M(i, j) = M(j, i) = off * rng.normal();
  }
  const DenseSpectrum spec = dense_eigs(M);
  WignerResult out;
  out.values = spec.values;
  out.vectors = spec.vectors;
  for (Eigen::Index c = 0; c < m; ++c) {
    Eigen::Index arg = 0;
    const double best = spec.vectors.col(c).array().square().maxCoeff(&arg);
    out.max_overlap.push_back(best);
    out.argmax.push_back(static_cast<int>(arg));
    out.hybridized.push_back(best < 0.5);
  }
  return out;
}

nlohmann::json scan_config_json(const PhaseScan& s) {
  nlohmann::json c;
  c["n"] = s.config.n;
  c["b"] = s.config.b;
  c["d"] = s.d;
  c["mu"] = s.config.mu;
  c["kappa"] = s.config.kappa;
  c["seed"] = s.config.seed;
  c["k_top"] = s.config.k_top;
  c["r"] = s.r;
  c["tol"] = s.config.tol;
  c["mode"] = std::string(to_string(s.config.mode));
  c["rng"] = std::string(Philox::algorithm);
  c["version"] = std::string(io::code_version());
  return c;
}

nlohmann::json mobility_report(const PhaseScan& s) {
  using nlohmann::json;
  json j;
  j["config"] = scan_config_json(s);
  j["method"] = std::string(to_string(s.method));
  int counts[3] = {0, 0, 0};
  for (const auto& p : s.points) ++counts[static_cast<int>(p.cls)];
  j["counts"] = {{"localized", counts[0]}, {"delocalized", counts[1]}, {"unclassified", counts[2]}};

  const double sqrt_d = std::sqrt(s.d);
  j["perron"] = {{"lambda", s.perron.value}, {"sqrt_d", sqrt_d}, {"ratio", s.perron.value / sqrt_d}};

  const double emp = s.top_eigenvalues.empty() ? kNaN : s.top_eigenvalues.front();
  json lm;
  lm["empirical"] = emp;
  if (s.config.b <= theory::b_star()) {
    const double th = theory::phase_constants(s.config.b).lambda_max;
    lm["theory"] = th;
    lm["ratio"] = emp / th;
  } else {
    lm["theory"] = nullptr;
    lm["ratio"] = nullptr;
  }
  j["lambda_max"] = lm;

  j["alpha_star"] = s.alpha_star;
  j["V_size"] = s.sets.V.size();
  j["W_size"] = s.sets.W.size();
  j["max_alpha"] = {{"vertex", s.max_alpha_vertex}, {"alpha", s.max_alpha}};
  j["diameter"] = s.diameter;
  j["d_range_warning"] = s.d_range_warning;

  const double lower = theory::lambda_of_alpha(s.alpha_star) + s.config.kappa;
  const SpacingStats sp = spacing_stats(s.eigenvalues, lower);
  json spj{{"lower", lower}, {"count", sp.count}, {"empty", sp.empty}};
  if (!sp.empty) {
    spj["min_gap"] = sp.min_gap;
    spj["median_gap"] = sp.median_gap;
  }
  j["spacing"] = spj;

  auto matches_json = [](const std::vector<VertexMatch>& ms) {
    json arr = json::array();
    for (const auto& m : ms)
      arr.push_back({{"lambda", m.lambda},
                     {"vertex", m.vertex},
                     {"alpha", m.alpha},
                     {"predicted", m.predicted},
                     {"gap", m.gap}});
    return arr;
  };
  j["matching"] = matches_json(s.matches);
  j["top_matching"] = matches_json(s.top_matches);

  json dos = json::array();
  for (const auto& c : s.dos) {
    json e{{"threshold", c.threshold}, {"count", c.count}, {"exact", c.exact},
           {"rho_b", theory::rho_b(c.threshold, s.config.b)}};
    e["exponent"] = c.count >= 1.0 ? json(std::log(c.count) / std::log(double(s.config.n)))
                                   : json(nullptr);
    dos.push_back(e);
  }
  j["dos"] = dos;
  return j;
}

}  // namespace mobility

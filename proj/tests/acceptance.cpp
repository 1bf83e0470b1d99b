// Acceptance runner: one PASS/FAIL line per criterion. Exits 0 when every
// failing criterion is listed in --expect-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"
#include "json.hpp"

#include "cli.hpp"
#include "mobility/eigensolvers.hpp"
#include "mobility/errors.hpp"
#include "mobility/graph.hpp"
#include "mobility/krylov.hpp"
#include "mobility/localization.hpp"
#include "mobility/parallel.hpp"
#include "mobility/phase.hpp"
#include "mobility/rng.hpp"
#include "mobility/sparse_operator.hpp"
#include "mobility/spacing.hpp"
#include "mobility/theory.hpp"

using namespace mobility;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  // Records one sub-check and folds it into the verdict.
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void info(const std::string& what) { lines.push_back("info " + what); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Eigen::MatrixXd explicit_matrix(const Graph& g, double d) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g.size(), g.size());
  for (auto [u, v] : g.edges()) m(u, v) = m(v, u) = 1 / std::sqrt(d);
  return m;
}

// 1 ------------------------------------------------------------------------
Outcome closed_form() {
  Outcome o;
  using namespace theory;
  o.check(std::abs(lambda_of_alpha(2.0) - 2) <= 1e-12, fmt("Lambda(2) = %.17g", lambda_of_alpha(2.0)));
  o.check(std::abs(lambda_of_alpha(5.0) - 2.5) <= 1e-12, fmt("Lambda(5) = %.17g", lambda_of_alpha(5.0)));
  double worst = 0;
  for (double a = 2; a <= 60; a += 0.01) worst = std::max(worst, std::abs(alpha_of_lambda(lambda_of_alpha(a)) - a));
  o.check(worst <= 1e-12, fmt("Lambda^-1 round trip over [2, 60]: max error %.3g", worst));
  o.check(std::abs(b_star() - 2.59) <= 5e-3, fmt("b_* = %.6f", b_star()));
  const auto pc = phase_constants(1.0);
  o.check(std::abs(pc.alpha_max - std::numbers::e) <= 1e-10, fmt("alpha_max(1) - e = %.3g", pc.alpha_max - std::numbers::e));
  const double le = lambda_of_alpha(std::numbers::e);
  o.check(std::abs(le - 2.0737) <= 5e-5, fmt("Lambda(e) = %.6f", le));
  // Right limit: the edge itself belongs to the |lambda| >= 2 branch.
  const double rho = rho_b(2.0, 1.0);
  o.check(std::abs(rho - (2 - 2 * std::log(2.0))) <= 1e-12, fmt("rho_1(2+) = %.17g", rho));
  const double h = bennett_h(1.0);
  o.check(std::abs(h - (2 * std::log(2.0) - 1)) <= 1e-12, fmt("h(1) = %.17g", h));

  // Truncated Neumann series of (1 - M/t)^{-1} e_1 on a long half-line.
  const int len = 300, K = 200;
  const double t = 3.0;
  std::vector<double> term(len + 2, 0.0), sum(len + 2, 0.0), next(len + 2, 0.0);
  term[1] = 1;
  for (int k = 0; k <= K; ++k) {
    for (int i = 1; i <= len; ++i) sum[i] += term[i];
    for (int i = 1; i <= len; ++i) next[i] = (term[i - 1] + term[i + 1]) / t;
    term.swap(next);
    term[0] = term[len + 1] = 0;
  }
  double err = 0;
  for (int j = 1; j <= 20; ++j) err = std::max(err, std::abs(sum[j] - halfline_resolvent(t, j)));
  o.check(err <= 1e-10, fmt("half-line resolvent at t = 3, j <= 20: max error %.3g", err));
  return o;
}

// 2 ------------------------------------------------------------------------
Outcome profile_identities() {
  Outcome o;
  const auto p3 = profile_coeffs(3.0, 200);
  o.check(std::abs(p3.u[0] * p3.u[0] - 0.25) <= 1e-6, fmt("alpha = 3: u_0^2 = %.12f", p3.u[0] * p3.u[0]));
  const auto p4 = profile_coeffs(4.0, 200);
  double moment = 0;
  for (std::size_t i = 0; i < p4.u.size(); ++i) moment += static_cast<double>(i) * p4.u[i] * p4.u[i];
  o.check(std::abs(moment - 1.0) <= 1e-6, fmt("alpha = 4: sum i u_i^2 = %.12f", moment));
  const double ll = ll_prediction(theory::lambda_of_alpha(4.0));
  o.check(std::abs(ll - 1.0) <= 1e-9, fmt("ll_prediction(Lambda(4)) = %.15f", ll));
  return o;
}

// 3 ------------------------------------------------------------------------
Outcome solver_oracle() {
  Outcome o;
  Philox rng(derive_seed(3, "acceptance-solver", 0));
  double worst_top = 0, worst_mask = 0, worst_mask_lanczos = 0;
  for (int t = 0; t < 50; ++t) {
    const Vertex n = 100 + static_cast<Vertex>(rng() % 901);
    const double d = 2 + 8 * rng.uniform();
    const Graph g = generate(n, d, derive_seed(3, "acceptance-graph", t));
    const auto op = build_operator(g, d);
    const Eigen::VectorXd dense = dense_eigenvalues(op);
    const auto top = lanczos_topk(op, {.k = 3, .seed = static_cast<std::uint64_t>(t), .max_iterations = 20000});
    for (int i = 0; i < 3; ++i) worst_top = std::max(worst_top, std::abs(top[i].value - dense[i]));

    VertexSet removed;
    for (Vertex x = 0; x < n; ++x)
      if (rng.uniform() < 0.1) removed.push_back(x);
    std::vector<Eigen::Index> keep;
    for (Vertex x = 0; x < n; ++x)
      if (!contains(removed, x)) keep.push_back(x);
    const Eigen::MatrixXd full = explicit_matrix(g, d);
    Eigen::MatrixXd sub(keep.size(), keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
      for (std::size_t j = 0; j < keep.size(); ++j) sub(i, j) = full(keep[i], keep[j]);
    Eigen::VectorXd expected(n);
    expected.head(keep.size()) = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sub, Eigen::EigenvaluesOnly).eigenvalues();
    expected.tail(removed.size()).setZero();
    std::sort(expected.data(), expected.data() + n, std::greater<>());
    const auto masked = build_operator(g, d, removed);
    worst_mask = std::max(worst_mask, (dense_eigenvalues(masked) - expected).cwiseAbs().maxCoeff());
    const auto mtop = lanczos_topk(masked, {.k = 3, .seed = static_cast<std::uint64_t>(t), .max_iterations = 20000});
    for (int i = 0; i < 3; ++i) worst_mask_lanczos = std::max(worst_mask_lanczos, std::abs(mtop[i].value - expected[i]));
  }
  o.check(worst_top <= 1e-8, fmt("Lanczos top-3 vs dense, 50 instances: max error %.3g", worst_top));
  o.check(worst_mask <= 1e-10, fmt("masked vs explicitly deleted spectra: max error %.3g", worst_mask));
  o.check(worst_mask_lanczos <= 1e-8, fmt("masked Lanczos top-3 vs deletion: max error %.3g", worst_mask_lanczos));
  return o;
}

// 4, 5 ---------------------------------------------------------------------
struct DeskRun {
  std::uint64_t seed = 0;
  Graph g;
  PhaseScan scan;
};

std::vector<DeskRun> desk_runs(int jobs) {
  std::vector<DeskRun> runs(5);
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    DeskRun& r = runs[i];
    r.seed = i + 1;
    const double d = std::log(2e4);
    r.g = generate(20000, d, r.seed);
    PhaseConfig c;
    c.n = 20000;
    c.b = 1.0;
    c.seed = r.seed;
    c.k_top = 5;
    c.mode = ScanMode::lanczos;
    r.scan = phase_scan(r.g, c);
  });
  return runs;
}

Outcome correspondence(const std::vector<DeskRun>& runs) {
  Outcome o;
  std::vector<double> worst;
  bool perron_ok = true;
  for (const auto& r : runs) {
    const auto& s = r.scan;
    double w = 0;
    for (const auto& m : s.top_matches) w = std::max(w, m.gap / std::abs(m.lambda));
    if (s.top_matches.size() < 5) w = std::nan("");
    worst.push_back(w);
    const double ratio = s.perron.value / std::sqrt(s.d);
    perron_ok = perron_ok && std::abs(ratio - 1) <= 0.2;
    o.info(fmt("seed %llu: max top-5 |lambda - Lambda(alpha_x)| / lambda = %.4f, lambda_1 / sqrt(d) = %.4f",
               static_cast<unsigned long long>(r.seed), w, ratio));
  }
  const double med = median(worst);
  o.check(med <= 0.08, fmt("median over seeds of the max relative error = %.4f (<= 0.08)", med));
  o.check(perron_ok, "Perron lambda_1 within 20% of sqrt(d) on every seed");
  return o;
}

Outcome localization_profile(const std::vector<DeskRun>& runs) {
  Outcome o;
  int good = 0;
  for (const auto& r : runs) {
    const auto& s = r.scan;
    const Vertex x = s.max_alpha_vertex;
    const double a = s.max_alpha;
    // The eigenvector associated with x: most weight at x among the computed
    // top pairs (rank matching is arbitrary between vertices of equal degree).
    const EigenPair* best = &s.pairs.front();
    for (const auto& p : s.pairs)
      if (p.value > 0 && p.vector[x] * p.vector[x] > best->vector[x] * best->vector[x]) best = &p;
    const Eigen::VectorXd& w = best->vector;
    double overlap = std::nan("");
    try {
      overlap = std::abs(w.dot(build_v_r(r.g, x, s.r, a)));
    } catch (const Error&) {
    }
    const double mass = w[x] * w[x];
    const double pred = (a - 2) / (2 * (a - 1));
    const bool ok = overlap >= 0.85 && std::abs(mass - pred) <= 0.1;
    good += ok;
    o.info(fmt("seed %llu: |V| = %zu, alpha_x = %.3f, lambda = %.4f, <w, v_%d> = %.4f, w_x^2 = %.4f vs %.4f%s",
               static_cast<unsigned long long>(r.seed), s.sets.V.size(), a, best->value, s.r, overlap, mass,
               pred, ok ? "" : "  (miss)"));
  }
  o.check(good >= 4, fmt("overlap >= 0.85 and center mass within 0.1 in %d of 5 seeds (need 4)", good));

  int tested = 0, slope_ok = 0;
  for (const auto& r : runs) {
    const auto& s = r.scan;
    const Eigen::VectorXd alphas = normalized_degrees(r.g, s.d);
    for (const auto& p : s.pairs) {
      if (p.value <= 0) continue;
      const auto rep = classify_eigenvector(p, r.g, s.d, alphas, s.sets.V, {.r = 4, .compute_overlap_w = false});
      if (rep.cls != EigenClass::localized) continue;
      const double slope = decay_slope(rep.decay, 1, 4);
      const double target = -0.5 * std::log(rep.alpha_center - 1) + 0.4;
      ++tested;
      slope_ok += slope <= target;
      o.info(fmt("seed %llu: localized lambda = %.4f, decay slope %.4f vs target %.4f",
                 static_cast<unsigned long long>(r.seed), rep.eigenvalue, slope, target));
    }
  }
  o.check(tested >= 1 && slope_ok == tested,
          fmt("decay slope within target for %d of %d localized eigenvectors", slope_ok, tested));
  return o;
}

// 6 ------------------------------------------------------------------------
Outcome localization_length_check(int jobs) {
  Outcome o;
  std::vector<double> rel;
  std::vector<PhaseScan> scans(3);
  parallel_for(scans.size(), jobs, [&](std::size_t i) {
    PhaseConfig c;
    c.n = 50000;
    c.b = 1.0;
    c.seed = i + 1;
    c.k_top = 10;
    c.mode = ScanMode::lanczos;
    scans[i] = phase_scan(c);
  });
  for (const auto& s : scans) {
    int above = 0;
    for (const auto& p : s.points) above += p.lambda >= 2.2;
    o.info(fmt("seed %llu: alpha* = %.3f, max alpha = %.3f, |V| = %zu, top non-Perron %.4f, points with lambda >= 2.2: %d",
               static_cast<unsigned long long>(s.config.seed), s.alpha_star, s.max_alpha, s.sets.V.size(),
               s.top_eigenvalues.front(), above));
  }
  for (const auto& s : scans)
    for (const auto& p : s.points)
      if (p.cls == EigenClass::localized && p.lambda >= 2.2) {
        rel.push_back(std::abs(p.ell / p.ell_pred - 1));
        o.info(fmt("seed %llu: lambda = %.4f, ell = %.4f, ell_pred = %.4f",
                   static_cast<unsigned long long>(p.seed), p.lambda, p.ell, p.ell_pred));
      }
  const double med = median(rel);
  o.check(!rel.empty() && med <= 0.3,
          fmt("n = 5e4, b = 1: %zu localized points with lambda >= 2.2, median |ell/ell_pred - 1| = %.4f (<= 0.3)",
              rel.size(), med));

  PhaseConfig c;
  c.n = 4000;
  c.b = 2.55;
  c.seed = 1;
  c.k_top = 5;
  c.bulk_samples = 60;
  c.mode = ScanMode::dense;
  c.jobs = jobs;
  const PhaseScan s = phase_scan(c);
  const double cap = std::pow(4000.0, -0.7);
  int mid = 0, ell_ok = 0, sup_ok = 0;
  double min_ratio = INFINITY, max_sup = 0;
  for (const auto& p : s.points) {
    if (std::abs(p.lambda) > 1.5) continue;
    ++mid;
    ell_ok += p.ell >= 0.7 * s.diameter;
    sup_ok += p.sup_sq <= cap;
    min_ratio = std::min(min_ratio, p.ell / s.diameter);
    max_sup = std::max(max_sup, p.sup_sq);
  }
  o.info(fmt("n = 4000, b = 2.55: diameter %d, %d mid-spectrum eigenvectors", s.diameter, mid));
  o.check(mid > 0 && ell_ok == mid,
          fmt("ell >= 0.7 diameter for %d of %d (min ell / diameter = %.4f)", ell_ok, mid, min_ratio));
  o.check(mid > 0 && sup_ok == mid,
          fmt("sup_sq <= n^-0.7 = %.5f for %d of %d (max sup_sq = %.5f)", cap, sup_ok, mid, max_sup));
  return o;
}

// 7 ------------------------------------------------------------------------
Outcome anticoncentration(int jobs) {
  Outcome o;
  const Sampler constant = [](Philox&) { return 1.0; };
  const Sampler atoms = [](Philox& r) { return static_cast<double>(r() % 10); };
  const Sampler unif = [](Philox& r) { return r.uniform(); };
  const auto qc = levy_q_estimate(constant, 0.1, 10000, 1);
  o.check(qc.q_hat == 1.0, fmt("constant: q_hat = %.6f", qc.q_hat));
  const auto qa = levy_q_estimate(atoms, 0.5, 100000, 2);
  o.check(std::abs(qa.q_hat - 0.2) <= qa.ci_half_width,
          fmt("uniform on {0..9}, L = 0.5: q_hat = %.5f +- %.5f", qa.q_hat, qa.ci_half_width));
  const auto qu = levy_q_estimate(unif, 0.25, 100000, 3);
  // The empirical sup over windows sits slightly above the true value.
  o.check(qu.q_hat >= 0.5 - qu.ci_half_width && qu.q_hat <= 0.5 + qu.ci_half_width,
          fmt("uniform[0,1], L = 0.25: q_hat = %.5f +- %.5f", qu.q_hat, qu.ci_half_width));

  std::vector<double> ratios;
  std::string list;
  for (int n : {4, 16, 64, 256}) {
    const auto k = kesten_check(unif, n, 0.05, 100000, derive_seed(7, "kesten", n));
    ratios.push_back(k.ratio);
    list += fmt(" %d:%.3f", n, k.ratio);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  o.check(*hi <= 2 * *lo, "Kesten ratio across n =" + list + fmt(" (max/min = %.3f <= 2)", *hi / *lo));

  const auto gw = gw_robust_prob(20, 5, 2000, 7, jobs);
  o.check(gw.value >= 0.99, fmt("GW robust root, d = 20, r = 5, 2000 trials: %.4f", gw.value));

  const double n = 5000, d = std::log(n), kappa = 0.1;
  const double astar = theory::alpha_star_exact(0.05, n, d, kappa);
  const double z = theory::lambda_of_alpha(astar) + 0.5;
  const double T = default_iota_threshold(n, d, kappa);
  std::vector<double> medians;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Graph g = generate(5000, d, seed);
    const Eigen::VectorXd alphas = normalized_degrees(g, d);
    Vertex top = 0, b = -1;
    for (Vertex x = 0; x < g.size(); ++x) {
      if (alphas[x] > alphas[top]) top = x;
      if (is_tree_ball(g, x, 2) && (b < 0 || alphas[x] > alphas[b])) b = x;
    }
    if (seed == 1) {
      std::string outcome = "ran";
      try {
        cavity_recursion(g, d, astar, top, 2, z, T);
      } catch (const StructureError& e) {
        outcome = e.what();
      }
      o.info(fmt("max-alpha vertex %d (alpha %.3f): %s", top, alphas[top], outcome.c_str()));
    }
    const auto st = cavity_recursion(g, d, astar, b, 2, z, T, {.jobs = jobs, .seed = seed});
    const auto H0 = build_operator(g, d, set_union({b}, large_degree_set(g, d, astar, {b})));
    std::vector<double> err;
    for (Vertex x : sphere(g, b, 1))
      if (H0.active(x)) err.push_back(std::abs(st.g.at(x) - green_diagonal(H0, z, x, 1e-12)));
    medians.push_back(median(err));
    o.info(fmt("seed %llu: root %d (alpha %.3f, tree B_2), z = %.4f, fidelity median %.3g",
               static_cast<unsigned long long>(seed), b, alphas[b], z, medians.back()));
  }
  const double worst = *std::max_element(medians.begin(), medians.end());
  o.check(worst <= 0.05, fmt("cavity fidelity at n = 5000, r = 2: worst median over 5 seeds %.3g (<= 0.05)", worst));
  return o;
}

// 8 ------------------------------------------------------------------------
Outcome determinism(const fs::path& out) {
  Outcome o;
  const fs::path dir = out / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto gen = [&](const std::string& name, const std::string& jobs) {
    const std::string file = (dir / name).string();
    if (!jobs.empty()) setenv("MOBILITYLAB_JOBS", jobs.c_str(), 1);
    const int code = cli::run({"gen", "--n", "20000", "--b", "1", "--seed", "5", "--out", file});
    unsetenv("MOBILITYLAB_JOBS");
    return code == 0 ? slurp(file) : std::string();
  };
  const std::string g1 = gen("g1.txt", ""), g2 = gen("g2.txt", "7");
  o.check(!g1.empty() && g1 == g2, "gen: repeated runs byte-identical");

  const std::vector<std::string> files{"phase_points.csv", "ll_curve.csv", "reports.json", "summary.json"};
  auto phase = [&](const std::string& name, const std::vector<std::string>& extra, const std::string& jobs) {
    std::vector<std::string> args{"phase", "--out", (dir / name).string(), "--jobs", jobs};
    args.insert(args.end(), extra.begin(), extra.end());
    return cli::run(args) == 0;
  };
  for (const auto& [label, extra] :
       std::vector<std::pair<std::string, std::vector<std::string>>>{
           {"dense", {"--n", "2000", "--b", "1.5", "--seeds", "1..3", "--bulk", "20"}},
           {"lanczos", {"--n", "6000", "--b", "1", "--seeds", "1..2", "--k-top", "6"}}}) {
    bool ran = phase(label + "_a", extra, "1") && phase(label + "_b", extra, "1") && phase(label + "_c", extra, "4");
    bool same = ran;
    for (const auto& f : files) {
      const std::string a = slurp(dir / (label + "_a") / f);
      same = same && !a.empty() && a == slurp(dir / (label + "_b") / f) && a == slurp(dir / (label + "_c") / f);
    }
    o.check(same, "phase (" + label + "): byte-identical across repeats and --jobs 1 / 4");
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string out = "acceptance_runs";
  std::vector<int> expected, only;
  int jobs = 0;
  app.add_option("--out", out, "scratch directory");
  app.add_option("--expect-fail", expected, "criteria whose failure is documented")->delimiter(',');
  app.add_option("--only", only, "run a subset")->delimiter(',');
  app.add_option("--jobs", jobs, "worker threads");
  CLI11_PARSE(app, argc, argv);
  jobs = resolve_jobs(jobs);
  fs::create_directories(out);

  auto wanted = [&](int c) { return only.empty() || std::count(only.begin(), only.end(), c) > 0; };
  std::vector<DeskRun> runs;
  auto desk = [&]() -> const std::vector<DeskRun>& {
    if (runs.empty()) runs = desk_runs(jobs);
    return runs;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed-form suite", closed_form},
      {"profile identities", profile_identities},
      {"solver oracle equivalence", solver_oracle},
      {"eigenvalue-vertex correspondence", [&] { return correspondence(desk()); }},
      {"localization profile", [&] { return localization_profile(desk()); }},
      {"localization length", [&] { return localization_length_check(jobs); }},
      {"anticoncentration lab", [&] { return anticoncentration(jobs); }},
      {"determinism", [&] { return determinism(out); }},
  };

  json record = json::object();
  std::vector<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!wanted(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& l : o.lines) std::cout << "    " << l << '\n';
    const bool known = std::count(expected.begin(), expected.end(), id) > 0;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first
              << fmt(" (%.1f s)", secs) << (!o.pass && known ? " [expected failure]" : "") << '\n'
              << std::flush;
    if (!o.pass) failed.push_back(id);
    record[std::to_string(id)] = {{"name", criteria[i].first}, {"pass", o.pass}, {"seconds", secs}, {"lines", o.lines}};
  }
  std::ofstream(fs::path(out) / "acceptance.json") << record.dump(2) << '\n';

  int unexpected = 0;
  for (int id : failed) unexpected += std::count(expected.begin(), expected.end(), id) == 0;
  std::cout << "summary: " << failed.size() << " failing, " << unexpected << " unexpected\n";
  return unexpected == 0 ? 0 : 1;
}

#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mobility/eigensolvers.hpp"
#include "mobility/errors.hpp"
#include "mobility/graph.hpp"
#include "mobility/io.hpp"
#include "mobility/krylov.hpp"
#include "mobility/localization.hpp"
#include "mobility/parallel.hpp"
#include "mobility/phase.hpp"
#include "mobility/rng.hpp"
#include "mobility/spacing.hpp"
#include "mobility/theory.hpp"

namespace mobility::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      throw ParameterError("bad seed list '" + text + "'");
    return v;
  };
  std::vector<std::uint64_t> out;
  std::string_view rest(text);
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto dots = item.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(number(item));
    } else {
      const std::uint64_t a = number(item.substr(0, dots));
      const std::uint64_t b = number(item.substr(dots + 2));
      if (b < a) throw ParameterError("bad seed range '" + std::string(item) + "'");
      if (b - a > 1000000) throw ParameterError("seed range too long");
      for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
    }
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

namespace {

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

// Shared graph flags: exactly one of --b / --d.
struct GraphFlags {
  std::int64_t n = 0;
  std::optional<double> b;
  std::optional<double> d;
  std::uint64_t seed = 1;

  CLI::App* attach(CLI::App* app, bool need_n = true) {
    auto* on = app->add_option("--n", n, "vertex count");
    if (need_n) on->required();
    auto* ob = app->add_option("--b", b, "sparseness, d = b log n");
    auto* od = app->add_option("--d", d, "expected degree");
    ob->excludes(od);
    app->add_option("--seed", seed, "generator seed");
    return app;
  }

  double resolve_d() const {
    if (b.has_value() == d.has_value()) throw ParameterError("exactly one of --b and --d is required");
    if (n < 1 || n > std::numeric_limits<Vertex>::max()) throw ParameterError("--n out of range");
    if (b) {
      if (!(*b > 0.0)) throw ParameterError("--b must be > 0");
      return *b * std::log(static_cast<double>(n));
    }
    return *d;
  }
  double resolve_b() const {
    const double dd = resolve_d();
    return b ? *b : dd / std::log(static_cast<double>(n));
  }
};

void emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-")
    std::cout << content;
  else
    io::write_atomic(out, content);
}

json base_config(const std::string& command, std::int64_t n, double d, double b) {
  return {{"command", command}, {"n", n}, {"d", d}, {"b", b},
          {"rng", std::string(Philox::algorithm)},
          {"version", std::string(io::code_version())}};
}

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"mobilitylab: spectra and localization of sparse Erdos-Renyi graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::code_version()));
  int jobs_flag = 0;

  // gen ---------------------------------------------------------------------
  GraphFlags gen_g;
  std::string gen_out = "-";
  auto* gen = gen_g.attach(app.add_subcommand("gen", "generate G(n, d/n) as an edge list"));
  gen->add_option("--out", gen_out, "output file, '-' for stdout");

  // spectrum ----------------------------------------------------------------
  GraphFlags sp_g;
  std::string sp_graph, sp_out = "-", sp_which = "largest", sp_method = "auto";
  int sp_k = 5, sp_maxit = 0;
  double sp_tol = 1e-10;
  auto* spectrum = app.add_subcommand("spectrum", "extremal eigenvalues of H = A / sqrt(d)");
  sp_g.attach(spectrum, false);
  spectrum->add_option("--graph", sp_graph, "edge-list file instead of generating");
  spectrum->add_option("--k", sp_k, "number of eigenpairs");
  spectrum->add_option("--which", sp_which, "largest | smallest | both")
      ->check(CLI::IsMember({"largest", "smallest", "both"}));
  spectrum->add_option("--method", sp_method, "auto | dense | lanczos")
      ->check(CLI::IsMember({"auto", "dense", "lanczos"}));
  spectrum->add_option("--tol", sp_tol, "residual tolerance");
  spectrum->add_option("--max-iterations", sp_maxit, "Lanczos matrix-vector budget");
  spectrum->add_option("--out", sp_out, "CSV output, '-' for stdout");

  // localize ----------------------------------------------------------------
  GraphFlags lo_g;
  double lo_mu = 0.05, lo_kappa = 0.1, lo_tol = 1e-10;
  int lo_r = 0, lo_maxit = 20000;
  std::string lo_out;
  auto* localize = lo_g.attach(app.add_subcommand("localize", "lambda(x), u(x) and profiles for x in W"));
  localize->add_option("--mu", lo_mu, "tail exponent for alpha*");
  localize->add_option("--kappa", lo_kappa, "distance from the mobility edge");
  localize->add_option("--r", lo_r, "profile depth (0: default)");
  localize->add_option("--tol", lo_tol, "eigensolver tolerance");
  localize->add_option("--max-iterations", lo_maxit, "Lanczos budget");
  localize->add_option("--out", lo_out, "output directory")->required();
  localize->add_option("--jobs", jobs_flag, "worker threads");

  // phase -------------------------------------------------------------------
  std::int64_t ph_n = 0;
  std::optional<double> ph_b, ph_d;
  double ph_mu = 0.05, ph_kappa = 0.1, ph_tol = 1e-10;
  int ph_k = 10, ph_r = 0, ph_bulk = 20, ph_maxit = 20000;
  std::uint64_t ph_master = 0;
  std::string ph_seeds = "1", ph_mode = "auto", ph_out;
  auto* phase = app.add_subcommand("phase", "mobility-edge scan over seeds");
  phase->add_option("--n", ph_n, "vertex count")->required();
  auto* phb = phase->add_option("--b", ph_b, "sparseness, d = b log n");
  auto* phd = phase->add_option("--d", ph_d, "expected degree");
  phb->excludes(phd);
  phase->add_option("--mu", ph_mu, "tail exponent for alpha*");
  phase->add_option("--kappa", ph_kappa, "distance from the mobility edge");
  phase->add_option("--k-top", ph_k, "extremal eigenpairs per edge");
  phase->add_option("--r", ph_r, "profile depth (0: default)");
  phase->add_option("--bulk", ph_bulk, "bulk eigenvectors sampled in dense mode");
  phase->add_option("--tol", ph_tol, "eigensolver tolerance");
  phase->add_option("--max-iterations", ph_maxit, "Lanczos budget");
  phase->add_option("--mode", ph_mode, "auto | dense | lanczos")
      ->check(CLI::IsMember({"auto", "dense", "lanczos"}));
  phase->add_option("--seeds", ph_seeds, "run indices, e.g. 1..5 or 1,3,7");
  phase->add_option("--master-seed", ph_master, "master seed hashed with each run index");
  phase->add_option("--out", ph_out, "output directory")->required();
  phase->add_option("--jobs", jobs_flag, "worker threads");

  // spacing -----------------------------------------------------------------
  GraphFlags sc_g;
  double sc_mu = 0.05, sc_kappa = 0.1, sc_eta = 0.5, sc_tol = 1e-10;
  std::optional<double> sc_T;
  std::vector<double> sc_z;
  int sc_r = 0, sc_k = 10;
  std::optional<Vertex> sc_root;
  std::string sc_out;
  auto* spacing = sc_g.attach(app.add_subcommand("spacing", "cavity recursion and eigenvalue gaps"));
  spacing->add_option("--mu", sc_mu, "tail exponent for alpha*");
  spacing->add_option("--kappa", sc_kappa, "distance from the mobility edge");
  spacing->add_option("--eta", sc_eta, "depth exponent for the default r");
  spacing->add_option("--r", sc_r, "cavity depth (0: default)");
  spacing->add_option("--T", sc_T, "iota threshold (default 10 max(sqrt(log n / d), 1 / kappa))");
  spacing->add_option("--z", sc_z, "spectral parameters (default Lambda(alpha*) + kappa / 2)");
  spacing->add_option("--root", sc_root, "root vertex (default: largest degree)");
  spacing->add_option("--k-top", sc_k, "top eigenvalues for the gap statistics");
  spacing->add_option("--tol", sc_tol, "solver tolerance");
  spacing->add_option("--out", sc_out, "output directory")->required();
  spacing->add_option("--jobs", jobs_flag, "worker threads");

  // anticoncentration ---------------------------------------------------------
  std::string ac_dist = "uniform", ac_out;
  std::vector<double> ac_L{0.05};
  std::vector<int> ac_terms{1, 4, 16, 64, 256};
  std::int64_t ac_samples = 100000;
  std::uint64_t ac_seed = 1;
  auto* anti = app.add_subcommand("anticoncentration", "Levy concentration and Kesten ratios");
  anti->add_option("--dist", ac_dist, "uniform | bernoulli10 | discrete10")
      ->check(CLI::IsMember({"uniform", "bernoulli10", "discrete10"}));
  anti->add_option("--L", ac_L, "half-widths");
  anti->add_option("--terms", ac_terms, "numbers of summands for the Kesten check");
  anti->add_option("--samples", ac_samples, "Monte-Carlo samples");
  anti->add_option("--seed", ac_seed, "seed");
  anti->add_option("--out", ac_out, "output directory")->required();

  // gw-robust ---------------------------------------------------------------
  double gw_d = 20.0;
  int gw_r = 5;
  std::int64_t gw_trials = 2000;
  std::uint64_t gw_seed = 1;
  std::string gw_out = "-";
  auto* gw = app.add_subcommand("gw-robust", "robust-root frequency of Poisson Galton-Watson trees");
  gw->add_option("--d", gw_d, "mean offspring")->required();
  gw->add_option("--r", gw_r, "depth")->required();
  gw->add_option("--trials", gw_trials, "trees simulated");
  gw->add_option("--seed", gw_seed, "master seed");
  gw->add_option("--out", gw_out, "JSON output, '-' for stdout");
  gw->add_option("--jobs", jobs_flag, "worker threads");

  // toy-wigner --------------------------------------------------------------
  std::vector<double> tw_lambdas;
  int tw_m = 50;
  double tw_gap = 0.01, tw_start = 2.5, tw_t = 0.0;
  std::uint64_t tw_seed = 1;
  std::string tw_out = "-";
  auto* toy = app.add_subcommand("toy-wigner", "deformed Wigner matrix D + sqrt(t) W");
  toy->add_option("--lambdas", tw_lambdas, "diagonal entries (default: uniform grid)");
  toy->add_option("--m", tw_m, "grid size when --lambdas is absent");
  toy->add_option("--gap", tw_gap, "grid spacing when --lambdas is absent");
  toy->add_option("--start", tw_start, "grid start when --lambdas is absent");
  toy->add_option("--t", tw_t, "coupling time")->required();
  toy->add_option("--seed", tw_seed, "seed");
  toy->add_option("--out", tw_out, "CSV output, '-' for stdout");

  // theory ------------------------------------------------------------------
  std::optional<double> th_loa, th_aol, th_theta, th_rho, th_h, th_halfline_t;
  std::optional<int> th_j;
  bool th_lmax = false, th_astar = false, th_bstar = false, th_asym = false;
  double th_b = 1.0, th_mu = 0.05, th_kappa = 0.1, th_n = 0.0, th_d = 0.0, th_t = 0.0;
  auto* theory_cmd = app.add_subcommand("theory", "closed-form quantities");
  theory_cmd->add_option("--lambda-of-alpha", th_loa, "Lambda(alpha)");
  theory_cmd->add_option("--alpha-of-lambda", th_aol, "Lambda^{-1}(lambda)");
  theory_cmd->add_option("--theta", th_theta, "theta_b(alpha), with --b");
  theory_cmd->add_option("--rho", th_rho, "rho_b(lambda), with --b");
  theory_cmd->add_flag("--lambda-max", th_lmax, "alpha_max(b) and lambda_max(b), with --b");
  theory_cmd->add_flag("--b-star", th_bstar, "b_* = 1 / (2 log 2 - 1)");
  theory_cmd->add_flag("--alpha-star", th_astar, "exact alpha*, with --mu --n --d --kappa");
  theory_cmd->add_flag("--alpha-star-asymptotic", th_asym, "(1 - mu) t / log t, with --mu --t");
  theory_cmd->add_option("--bennett-h", th_h, "h(a)");
  theory_cmd->add_option("--halfline", th_halfline_t, "half-line resolvent at t, with --j");
  theory_cmd->add_option("--j", th_j, "index for --halfline");
  theory_cmd->add_option("--b", th_b, "sparseness");
  theory_cmd->add_option("--mu", th_mu, "tail exponent");
  theory_cmd->add_option("--kappa", th_kappa, "clamp offset");
  theory_cmd->add_option("--n", th_n, "vertex count (real)");
  theory_cmd->add_option("--d", th_d, "expected degree");
  theory_cmd->add_option("--t", th_t, "log n / d");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      std::cout << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      std::cout << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::CallForVersion&) {
      std::cout << io::code_version() << '\n';
      return 0;
    } catch (const CLI::ParseError& e) {
      std::cerr << "error: kind=parameter message=\"" << one_line(e.what()) << "\"\n";
      return 2;
    }
    if (gen->parsed()) {
      const double d = gen_g.resolve_d();
      const Graph g = generate(static_cast<Vertex>(gen_g.n), d, gen_g.seed);
      std::ostringstream os;
      write_edge_list(os, g);
      emit(gen_out, os.str());
      return 0;
    }

    if (spectrum->parsed()) {
      Graph g;
      double d = 0.0;
      if (!sp_graph.empty()) {
        std::ifstream in(sp_graph);
        if (!in) throw ParameterError("cannot read " + sp_graph);
        g = read_edge_list(in);
        if (sp_g.d)
          d = *sp_g.d;
        else if (g.meta())
          d = g.meta()->d;
        else
          throw ParameterError("--d is required for a graph file without header");
      } else {
        d = sp_g.resolve_d();
        g = generate(static_cast<Vertex>(sp_g.n), d, sp_g.seed);
      }
      const SparseSymOperator H = build_operator(g, d);
      check_range(sp_k >= 1 && sp_k <= g.size(), "--k out of range");
      const bool dense = sp_method == "dense" || (sp_method == "auto" && g.size() <= 2000);
      std::vector<EigenPair> pairs;
      if (dense) {
        const DenseSpectrum s = dense_eigs(H);
        const Eigen::Index m = s.size();
        const int hi = sp_which == "smallest" ? 0 : sp_which == "both" ? (sp_k + 1) / 2 : sp_k;
        for (int i = 0; i < hi; ++i) pairs.push_back(s.pair(i));
        for (int i = 0; i < sp_k - hi; ++i) pairs.push_back(s.pair(m - (sp_k - hi) + i));
      } else {
        LanczosOptions lo;
        lo.k = sp_k;
        lo.which = sp_which == "smallest" ? Which::smallest
                   : sp_which == "both"   ? Which::both
                                          : Which::largest;
        lo.tol = sp_tol;
        lo.seed = derive_seed(sp_g.seed, "spectrum", 0);
        lo.max_iterations = sp_maxit;
        pairs = lanczos_topk(H, lo);
      }
      json cfg = base_config("spectrum", g.size(), d, d / std::log(double(g.size())));
      cfg["k"] = sp_k;
      cfg["which"] = sp_which;
      cfg["tol"] = sp_tol;
      cfg["seed"] = sp_g.seed;
      std::ostringstream os;
      os << io::csv_config_line(cfg) << "index,lambda,residual,iterations,method\n";
      for (std::size_t i = 0; i < pairs.size(); ++i)
        os << i << ',' << io::format_double(pairs[i].value) << ','
           << io::format_double(pairs[i].residual) << ',' << pairs[i].iterations << ','
           << to_string(pairs[i].method) << '\n';
      emit(sp_out, os.str());
      return 0;
    }

    if (localize->parsed()) {
      const double d = lo_g.resolve_d();
      const double n = static_cast<double>(lo_g.n);
      const Graph g = generate(static_cast<Vertex>(lo_g.n), d, lo_g.seed);
      const double astar = theory::alpha_star_exact(lo_mu, n, d, lo_kappa);
      const Eigen::VectorXd alphas = normalized_degrees(g, d);
      const VertexSets sets = vertex_sets(alphas, astar, lo_kappa);
      const SparseSymOperator H = build_operator(g, d);
      const int r = lo_r > 0 ? lo_r : default_depth(n, d);
      const int jobs = resolve_jobs(jobs_flag);

      struct Row {
        UxResult ux;
        double overlap_vw = std::nan("");
        double lambda_w = std::nan("");
      };
      std::vector<Row> rows(sets.W.size());
      parallel_for(rows.size(), jobs, [&](std::size_t i) {
        const Vertex x = sets.W[i];
        UxOptions uo;
        uo.tol = lo_tol;
        uo.seed = derive_seed(lo_g.seed, "localize", static_cast<std::uint64_t>(x));
        uo.max_iterations = lo_maxit;
        rows[i].ux = compute_u_x(H, sets.V, x, uo);
        try {
          const Eigen::VectorXd v = build_v_r(g, x, r, alphas[x]);
          const EigenPair w = build_w_r(g, d, x, r, lo_tol, uo.seed);
          rows[i].overlap_vw = v.dot(w.vector);
          rows[i].lambda_w = w.value;
        } catch (const StructureError&) {
        }
      });

      json cfg = base_config("localize", lo_g.n, d, lo_g.resolve_b());
      cfg.update({{"mu", lo_mu}, {"kappa", lo_kappa}, {"r", r}, {"seed", lo_g.seed}, {"tol", lo_tol}});
      std::ostringstream os;
      os << io::csv_config_line(cfg)
         << "x,alpha,Lambda,lambda_x,gap,degenerate,residual,center_mass,center_mass_pred,lambda_w,overlap_vw\n";
      for (const auto& row : rows) {
        const double a = alphas[row.ux.x];
        os << row.ux.x << ',' << io::format_double(a) << ','
           << io::format_double(theory::lambda_of_alpha(a)) << ','
           << io::format_double(row.ux.lambda) << ',' << io::format_double(row.ux.gap) << ','
           << (row.ux.degenerate ? 1 : 0) << ',' << io::format_double(row.ux.residual) << ','
           << io::format_double(row.ux.u[row.ux.x] * row.ux.u[row.ux.x]) << ','
           << io::format_double((a - 2.0) / (2.0 * (a - 1.0))) << ','
           << io::format_double(row.lambda_w) << ',' << io::format_double(row.overlap_vw) << '\n';
      }
      const fs::path dir(lo_out);
      io::write_atomic(dir / "ux.csv", os.str());
      json sj{{"config", cfg}, {"alpha_star", astar}, {"V", sets.V}, {"W", sets.W}};
      io::write_atomic(dir / "sets.json", sj.dump(2) + "\n");
      return 0;
    }

    if (phase->parsed()) {
      check_range(ph_b.has_value() != ph_d.has_value(), "exactly one of --b and --d is required");
      check_range(ph_n >= 3 && ph_n <= std::numeric_limits<Vertex>::max(), "--n out of range");
      const double ln = std::log(static_cast<double>(ph_n));
      const double b = ph_b ? *ph_b : *ph_d / ln;
      const auto seeds = parse_seeds(ph_seeds);
      const int jobs = resolve_jobs(jobs_flag);

      PhaseConfig base;
      base.n = static_cast<Vertex>(ph_n);
      base.b = b;
      base.mu = ph_mu;
      base.kappa = ph_kappa;
      base.k_top = ph_k;
      base.r = ph_r;
      base.bulk_samples = ph_bulk;
      base.tol = ph_tol;
      base.max_iterations = ph_maxit;
      base.mode = ph_mode == "dense"     ? ScanMode::dense
                  : ph_mode == "lanczos" ? ScanMode::lanczos
                                         : ScanMode::automatic;
      std::vector<PhaseScan> scans(seeds.size());
      parallel_for(seeds.size(), jobs, [&](std::size_t i) {
        PhaseConfig c = base;
        c.seed = derive_seed(ph_master, "phase", seeds[i]);
        scans[i] = phase_scan(c);
      });

      json cfg = base_config("phase", ph_n, b * ln, b);
      cfg.update({{"mu", ph_mu}, {"kappa", ph_kappa}, {"k_top", ph_k}, {"seeds", seeds},
                  {"master_seed", ph_master}, {"tol", ph_tol}, {"mode", ph_mode},
                  {"seed_derivation", "derive_seed(master_seed, \"phase\", index)"}});
      std::vector<PhasePoint> points;
      json reports = json::array(), summary = json::array();
      for (std::size_t i = 0; i < scans.size(); ++i) {
        const auto& s = scans[i];
        points.insert(points.end(), s.points.begin(), s.points.end());
        json rj = json::array();
        for (const auto& r : s.reports) rj.push_back(report_json(r));
        reports.push_back({{"index", seeds[i]}, {"seed", s.config.seed}, {"perron", report_json(s.perron_report)},
                           {"reports", rj}});
        json m = mobility_report(s);
        m["index"] = seeds[i];
        summary.push_back(m);
      }
      const fs::path dir(ph_out);
      std::ostringstream pts, ll;
      pts << io::csv_config_line(cfg);
      write_phase_points_csv(pts, points);
      ll << io::csv_config_line(cfg);
      write_ll_curve_csv(ll, points);
      io::write_atomic(dir / "phase_points.csv", pts.str());
      io::write_atomic(dir / "ll_curve.csv", ll.str());
      io::write_atomic(dir / "reports.json", json{{"config", cfg}, {"runs", reports}}.dump(2) + "\n");
      io::write_atomic(dir / "summary.json", json{{"config", cfg}, {"runs", summary}}.dump(2) + "\n");
      return 0;
    }

    if (spacing->parsed()) {
      const double d = sc_g.resolve_d();
      const double n = static_cast<double>(sc_g.n);
      const Graph g = generate(static_cast<Vertex>(sc_g.n), d, sc_g.seed);
      const double astar = theory::alpha_star_exact(sc_mu, n, d, sc_kappa);
      const Eigen::VectorXd alphas = normalized_degrees(g, d);
      Vertex root = 0;
      if (sc_root) {
        check_range(*sc_root >= 0 && *sc_root < g.size(), "--root out of range");
        root = *sc_root;
      } else {
        Eigen::Index arg = 0;
        alphas.maxCoeff(&arg);
        root = static_cast<Vertex>(arg);
      }
      const int r = sc_r > 0 ? sc_r : default_cavity_depth(n, d, sc_eta);
      const double T = sc_T ? *sc_T : default_iota_threshold(n, d, sc_kappa);
      const SpectralWindow window = spectral_window(astar, sc_kappa, d);
      if (sc_z.empty()) sc_z.push_back(theory::lambda_of_alpha(astar) + sc_kappa / 2.0);
      CavityOptions co;
      co.tol = sc_tol;
      co.jobs = resolve_jobs(jobs_flag);
      co.seed = derive_seed(sc_g.seed, "spacing", 0);

      json cfg = base_config("spacing", sc_g.n, d, sc_g.resolve_b());
      cfg.update({{"mu", sc_mu}, {"kappa", sc_kappa}, {"eta", sc_eta}, {"r", r}, {"T", T},
                  {"root", root}, {"seed", sc_g.seed}, {"tol", sc_tol}});
      const fs::path dir(sc_out);
      // Reference Green function G(0, z): the root and V^{({root})} removed,
      // which is H^{(V)} whenever the root itself lies in V.
      const SparseSymOperator HV =
          build_operator(g, d, set_union({root}, large_degree_set(g, d, astar, {root})));
      const VertexSet s1 = sphere(g, root, 1);
      json runs = json::array();
      for (std::size_t i = 0; i < sc_z.size(); ++i) {
        const double z = sc_z[i];
        const CavityState st = cavity_recursion(g, d, astar, root, r, z, T, co);
        std::vector<double> err;
        for (Vertex x : s1) {
          if (!HV.active(x)) continue;
          err.push_back(std::abs(st.g.at(x) - green_diagonal(HV, z, x, sc_tol)));
        }
        std::sort(err.begin(), err.end());
        json run{{"z", z}, {"inside_window", window.contains(z)}, {"boundary_solves", st.boundary.size()}};
        if (!err.empty()) {
          const std::size_t m = err.size();
          run["fidelity_median"] = m % 2 ? err[m / 2] : 0.5 * (err[m / 2 - 1] + err[m / 2]);
          run["fidelity_max"] = err.back();
        }
        runs.push_back(run);
        std::ostringstream os;
        json zc = cfg;
        zc["z"] = z;
        os << io::csv_config_line(zc);
        write_cavity_csv(os, st);
        io::write_atomic(dir / ("cavity_" + std::to_string(i) + ".csv"), os.str());
      }

      LanczosOptions lo;
      lo.k = std::min<int>(sc_k + 1, g.size());
      lo.tol = sc_tol;
      lo.seed = derive_seed(sc_g.seed, "spacing", 1);
      lo.max_iterations = 20000;
      const auto top = lanczos_topk(build_operator(g, d), lo);
      std::vector<double> eigs;
      for (std::size_t i = 1; i < top.size(); ++i) eigs.push_back(top[i].value);
      const double lower = theory::lambda_of_alpha(astar) + sc_kappa;
      const SpacingStats stats = spacing_stats(eigs, lower);
      std::ostringstream gs;
      gs << io::csv_config_line(cfg);
      write_gaps_csv(gs, stats);
      io::write_atomic(dir / "gaps.csv", gs.str());
      json sj{{"config", cfg},
              {"alpha_star", astar},
              {"window", {{"low", window.low}, {"high", window.high}, {"empty", window.empty()}}},
              {"robust_root", contains(robust_set(g, root, r, d), root)},
              {"cavity", runs},
              {"spacing", {{"lower", lower}, {"count", stats.count}, {"empty", stats.empty}}}};
      if (!stats.empty) {
        sj["spacing"]["min_gap"] = stats.min_gap;
        sj["spacing"]["median_gap"] = stats.median_gap;
      }
      io::write_atomic(dir / "summary.json", sj.dump(2) + "\n");
      return 0;
    }

    if (anti->parsed()) {
      Sampler sampler;
      if (ac_dist == "uniform")
        sampler = [](Philox& rng) { return rng.uniform(); };
      else if (ac_dist == "bernoulli10")
        sampler = [](Philox& rng) { return (rng() >> 63) ? 10.0 : 0.0; };
      else
        sampler = [](Philox& rng) { return std::floor(rng.uniform() * 10.0); };
      json cfg{{"command", "anticoncentration"}, {"dist", ac_dist}, {"samples", ac_samples},
               {"seed", ac_seed}, {"version", std::string(io::code_version())},
               {"rng", std::string(Philox::algorithm)}};
      std::ostringstream cs, ks;
      cs << io::csv_config_line(cfg) << "L,q_hat,ci,samples\n";
      for (double L : ac_L) {
        const auto est = levy_q_estimate(sampler, L, ac_samples, ac_seed);
        cs << io::format_double(L) << ',' << io::format_double(est.q_hat) << ','
           << io::format_double(est.ci_half_width) << ',' << est.samples << '\n';
      }
      ks << io::csv_config_line(cfg) << "L,n_terms,lhs,lhs_ci,term_q,rhs_factor,ratio\n";
      for (double L : ac_L)
        for (int t : ac_terms) {
          const auto k = kesten_check(sampler, t, L, ac_samples, derive_seed(ac_seed, "kesten", t));
          ks << io::format_double(L) << ',' << t << ',' << io::format_double(k.sum.q_hat) << ','
             << io::format_double(k.sum.ci_half_width) << ',' << io::format_double(k.term.q_hat)
             << ',' << io::format_double(k.rhs_factor) << ',' << io::format_double(k.ratio) << '\n';
        }
      const fs::path dir(ac_out);
      io::write_atomic(dir / "concentration.csv", cs.str());
      io::write_atomic(dir / "kesten.csv", ks.str());
      return 0;
    }

    if (gw->parsed()) {
      const auto f = gw_robust_prob(gw_d, gw_r, gw_trials, gw_seed, resolve_jobs(jobs_flag));
      json j{{"config",
              {{"command", "gw-robust"}, {"d", gw_d}, {"r", gw_r}, {"trials", gw_trials},
               {"seed", gw_seed}, {"version", std::string(io::code_version())},
               {"rng", std::string(Philox::algorithm)}}},
             {"frequency", f.value},
             {"ci_half_width", f.ci_half_width}};
      emit(gw_out, j.dump(2) + "\n");
      return 0;
    }

    if (toy->parsed()) {
      if (tw_lambdas.empty()) {
        check_range(tw_m >= 1, "--m must be >= 1");
        for (int i = 0; i < tw_m; ++i) tw_lambdas.push_back(tw_start + i * tw_gap);
      }
      const WignerResult w = deformed_wigner(tw_lambdas, tw_t, tw_seed);
      json cfg{{"command", "toy-wigner"}, {"m", tw_lambdas.size()}, {"t", tw_t},
               {"seed", tw_seed}, {"version", std::string(io::code_version())},
               {"rng", std::string(Philox::algorithm)}};
      std::ostringstream os;
      os << io::csv_config_line(cfg) << "index,value,max_overlap,argmax,hybridized\n";
      for (std::size_t i = 0; i < w.max_overlap.size(); ++i)
        os << i << ',' << io::format_double(w.values[static_cast<Eigen::Index>(i)]) << ','
           << io::format_double(w.max_overlap[i]) << ',' << w.argmax[i] << ','
           << (w.hybridized[i] ? 1 : 0) << '\n';
      emit(tw_out, os.str());
      return 0;
    }

    if (theory_cmd->parsed()) {
      std::vector<std::pair<std::string, double>> out;
      if (th_loa) out.emplace_back("lambda_of_alpha", theory::lambda_of_alpha(*th_loa));
      if (th_aol) out.emplace_back("alpha_of_lambda", theory::alpha_of_lambda(*th_aol));
      if (th_theta) out.emplace_back("theta_b", theory::theta_b(*th_theta, th_b));
      if (th_rho) out.emplace_back("rho_b", theory::rho_b(*th_rho, th_b));
      if (th_lmax) {
        const auto pc = theory::phase_constants(th_b);
        out.emplace_back("alpha_max", pc.alpha_max);
        out.emplace_back("lambda_max", pc.lambda_max);
      }
      if (th_bstar) out.emplace_back("b_star", theory::b_star());
      if (th_astar) out.emplace_back("alpha_star", theory::alpha_star_exact(th_mu, th_n, th_d, th_kappa));
      if (th_asym) out.emplace_back("alpha_star_asymptotic", theory::alpha_star_asymptotic(th_mu, th_t));
      if (th_h) out.emplace_back("bennett_h", theory::bennett_h(*th_h));
      if (th_halfline_t) {
        if (!th_j) throw ParameterError("--halfline requires --j");
        out.emplace_back("halfline_resolvent", theory::halfline_resolvent(*th_halfline_t, *th_j));
      }
      if (out.empty()) throw ParameterError("theory: no quantity requested");
      if (out.size() == 1) {
        std::cout << io::format_double(out.front().second) << '\n';
      } else {
        for (const auto& [name, value] : out) std::cout << name << ' ' << io::format_double(value) << '\n';
      }
      return 0;
    }
    return 0;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: kind=" << e.tag() << " best_residual=" << io::format_double(e.best_residual())
              << " message=\"" << one_line(e.what()) << "\"\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: kind=" << e.tag() << " message=\"" << one_line(e.what()) << "\"\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=io message=\"" << one_line(e.what()) << "\"\n";
    return 2;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("mobilitylab");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace mobility::cli

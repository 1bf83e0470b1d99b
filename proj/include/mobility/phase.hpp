#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "mobility/eigensolvers.hpp"
#include "mobility/graph.hpp"
#include "mobility/localization.hpp"
#include "mobility/spacing.hpp"

namespace mobility {

enum class ScanMode { automatic, dense, lanczos };

struct PhaseConfig {
  Vertex n = 2000;
  double b = 1.0;
  double mu = 0.05;
  double kappa = 0.1;
  int k_top = 10;
  std::uint64_t seed = 1;
  int bulk_samples = 20;    // dense mode only
  int r = 0;                // 0 means default_depth(n, d)
  double tol = 1e-10;
  int max_iterations = 20000;
  ScanMode mode = ScanMode::automatic;
  int jobs = 1;
  std::vector<double> dos_grid{1.9, 2.0, 2.05};
  int kpm_moments = 256;
  int kpm_probes = 16;
};

struct PhasePoint {
  double b = 0.0;
  Vertex n = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double ell = 0.0;
  double ell_pred = 0.0;  // NaN when undefined
  double sup_sq = 0.0;
  EigenClass cls = EigenClass::unclassified;
};

struct DosCount {
  double threshold = 0.0;
  double count = 0.0;     // non-Perron eigenvalues >= threshold
  bool exact = false;     // false for the stochastic estimate
};

struct PhaseScan {
  PhaseConfig config;
  double d = 0.0;
  double alpha_star = 0.0;
  int r = 0;
  bool d_range_warning = false;
  SolverMethod method = SolverMethod::dense;
  VertexSets sets;
  Vertex max_alpha_vertex = 0;
  double max_alpha = 0.0;
  int diameter = 0;

  EigenPair perron;
  LocalizationReport perron_report;

  std::vector<EigenPair> pairs;  // analyzed non-Perron pairs, descending
  std::vector<LocalizationReport> reports;
  std::vector<PhasePoint> points;

  std::vector<double> top_eigenvalues;  // non-Perron, descending
  std::vector<double> eigenvalues;      // every computed non-Perron eigenvalue, descending
  std::vector<VertexMatch> matches;     // top-|W| eigenvalues against W
  std::vector<VertexMatch> top_matches; // top-k eigenvalues against the top-k vertices by alpha
  std::vector<DosCount> dos;
};

/// Generates G(n, b log n / n) with the configured seed and runs the scan.
PhaseScan phase_scan(const PhaseConfig& config);

/// Scan on a given graph with d = b log n; the graph must have n vertices.
PhaseScan phase_scan(const Graph& g, const PhaseConfig& config);

/// Whether d sits inside sqrt(log n) log log n <= d <= 3 log n.
bool in_d_range(double n, double d);

void write_phase_points_csv(std::ostream& out, const std::vector<PhasePoint>& points);

/// (lambda, ell, ell_pred) rows; localized points predict ll_prediction(lambda),
/// delocalized points the diameter, others NaN.
void write_ll_curve_csv(std::ostream& out, const std::vector<PhasePoint>& points);

struct WignerResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  std::vector<double> max_overlap;  // max_j <v, e_j>^2
  std::vector<int> argmax;
  std::vector<bool> hybridized;     // max_overlap < 1/2
};

/// M(t) = D + sqrt(t) W with W symmetric Gaussian, diagonal variance 2/m and
/// off-diagonal variance 1/m, m = |lambdas|.
WignerResult deformed_wigner(const std::vector<double>& lambdas, double t, std::uint64_t seed);

/// Summary JSON: class counts, max non-Perron eigenvalue against lambda_max(b),
/// spacing above Lambda(alpha*) + kappa, matching table, density-of-states
/// exponents.
nlohmann::json mobility_report(const PhaseScan& scan);

/// Config block embedded in every output.
nlohmann::json scan_config_json(const PhaseScan& scan);

}  // namespace mobility

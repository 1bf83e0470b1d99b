#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "mobility/eigensolvers.hpp"
#include "mobility/graph.hpp"
#include "mobility/sparse_operator.hpp"

namespace mobility {

/// Radial profile u_0(alpha), ..., u_{r-1}(alpha), normalized in l2.
struct ProfileCoeffs {
  double alpha = 0.0;
  int r = 0;
  std::vector<double> u;
};

/// u_1 = sqrt(alpha / (alpha - 1)) u_0 and u_i = (alpha - 1)^{-(i-1)/2} u_1.
/// Requires alpha > 2 and r >= 2.
ProfileCoeffs profile_coeffs(double alpha, int r);

/// Default depth max(2, floor(log n / (6 log d))).
int default_depth(double n, double d);

/// v_r(x) = sum_{i<r} u_i 1_{S_i(x)} / |S_i(x)|^{1/2}. For r = 1 this is 1_x.
/// Throws StructureError if some S_i(x), i < r, is empty.
Eigen::VectorXd build_v_r(const Graph& g, Vertex x, int r, double alpha_x);

/// Balls up to this size are solved densely in build_w_r.
inline constexpr std::size_t kDenseBallLimit = 1500;

/// Top eigenpair of H restricted to B_r(x), embedded in R^n, with w_x >= 0.
EigenPair build_w_r(const Graph& g, double d, Vertex x, int r, double tol = 1e-10,
                    std::uint64_t seed = 0);

struct VertexSets {
  VertexSet V;  // alpha_x >= alpha*
  VertexSet W;  // x in V with Lambda(alpha_x) >= Lambda(alpha*) + kappa / 2
};
VertexSets vertex_sets(const Eigen::VectorXd& alphas, double alpha_star, double kappa);

struct UxOptions {
  double tol = 1e-10;
  std::uint64_t seed = 0;
  int max_iterations = 0;  // forwarded to lanczos_topk
  int k = 3;               // extremal eigenpairs computed for the gap
};

struct UxResult {
  Vertex x = 0;
  double lambda = 0.0;  // lambda_2(H^{(V \ {x})})
  Eigen::VectorXd u;    // unit, <1_x, u> >= 0
  double gap = 0.0;     // distance to the other computed eigenvalues
  bool degenerate = false;
  double residual = 0.0;
  int iterations = 0;
};

inline constexpr double kDegeneracyThreshold = 1e-8;

/// lambda(x) and u(x): second eigenpair of H with V \ {x} removed. `H`
/// supplies the graph and d; its own mask is ignored.
UxResult compute_u_x(const SparseSymOperator& H, const VertexSet& V, Vertex x,
                     const UxOptions& opt = {});

/// Entry i is || w restricted to the complement of B_i(x) ||, i = 0..r_max.
std::vector<double> decay_profile(const Eigen::VectorXd& w, const Graph& g, Vertex x, int r_max);

/// Least-squares slope of log(decay[i]) over i in [first, last]; zero
/// entries are skipped. NaN when fewer than two usable points.
double decay_slope(const std::vector<double>& decay, int first, int last);

enum class LengthMode { automatic, exact, candidates };

struct LocalizationLength {
  double ell = 0.0;
  Vertex center = 0;
};

/// Candidate count used by the default heuristic.
inline constexpr int kLengthCandidates = 64;

/// l(w) = min_x sum_y d(x, y) w_y^2. Unreachable vertices count at
/// distance n. `automatic` scans all vertices when n <= 2000, otherwise
/// the top-64 vertices by w_y^2 plus the vertex of largest degree.
/// Explicit `candidates` override the heuristic set. Ties go to the
/// smallest id.
LocalizationLength localization_length(const Eigen::VectorXd& w, const Graph& g,
                                       LengthMode mode = LengthMode::automatic,
                                       const std::optional<VertexSet>& candidates = std::nullopt);

/// |lambda| / (2 sqrt(lambda^2 - 4)); requires |lambda| > 2.
double ll_prediction(double lam);

enum class EigenClass { localized, delocalized, unclassified };
std::string_view to_string(EigenClass c);

struct LocalizationReport {
  double eigenvalue = 0.0;
  Vertex center = 0;
  double alpha_center = 0.0;
  double center_mass = 0.0;
  std::vector<double> decay;
  double ell = 0.0;
  double sup_sq = 0.0;
  std::optional<double> overlap_v;  // absent when v_r(center) is undefined
  std::optional<double> overlap_w;
  EigenClass cls = EigenClass::unclassified;
  bool perron = false;
};

struct ClassifyParams {
  double kappa = 0.1;
  int r = 2;
  bool perron = false;          // caller marks the Perron pair explicitly
  bool compute_overlap_w = true;
  LengthMode length_mode = LengthMode::automatic;
};

/// Vectors with <w, 1>^2 / n at least this large are treated as Perron.
inline constexpr double kPerronOverlap = 0.5;

/// Diagnostics for one eigenpair of H. Localized when |lambda| >= 2 + kappa
/// and the center lies in V; delocalized when |lambda| <= 2 - kappa;
/// unclassified otherwise and always for the Perron pair.
LocalizationReport classify_eigenvector(const EigenPair& pair, const Graph& g, double d,
                                        const Eigen::VectorXd& alphas, const VertexSet& V,
                                        const ClassifyParams& params = {});

struct VertexMatch {
  double lambda = 0.0;
  Vertex vertex = 0;
  double alpha = 0.0;
  double predicted = 0.0;  // Lambda(alpha)
  double gap = 0.0;        // |lambda - predicted|
};

/// Pairs eigenvalues sorted descending with `vertices` sorted by Lambda(alpha)
/// descending (ties by id), rank by rank. Vertices with alpha < 2 are dropped.
std::vector<VertexMatch> match_eigenvalues(std::vector<double> eigenvalues,
                                           const VertexSet& vertices,
                                           const Eigen::VectorXd& alphas);

/// One JSON object per report.
nlohmann::json report_json(const LocalizationReport& report);
void write_reports_csv(std::ostream& out, const std::vector<LocalizationReport>& reports);

}  // namespace mobility

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mobility/errors.hpp"
#include "mobility/rng.hpp"
#include "mobility/sparse_operator.hpp"

namespace mobility {

enum class SolverMethod { dense, lanczos };

std::string_view to_string(SolverMethod m);

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  int iterations = 0;
  SolverMethod method = SolverMethod::dense;
};

/// Anything that knows its dimension and can apply itself to a vector.
template <class Op>
concept SymmetricOperator = requires(const Op& op, const Eigen::VectorXd& v, Eigen::VectorXd& out) {
  { op.rows() } -> std::convertible_to<Eigen::Index>;
  op.apply(v, out);
};

/// Operators that can zero the coordinates they ignore.
template <class Op>
concept ProjectingOperator = SymmetricOperator<Op> && requires(const Op& op, Eigen::VectorXd& v) {
  op.project(v);
};

template <SymmetricOperator Op>
double residual_norm(const Op& op, double value, const Eigen::VectorXd& vec) {
  Eigen::VectorXd hv(vec.size());
  op.apply(vec, hv);
  return (hv - value * vec).norm();
}

/// Full spectrum of a dense symmetric matrix, descending.
struct DenseSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;   // column i belongs to values[i]
  Eigen::VectorXd residuals;

  Eigen::Index size() const { return values.size(); }
  EigenPair pair(Eigen::Index i) const;
};

inline constexpr Eigen::Index kDenseLimit = 4000;

/// Householder tridiagonalization plus divide-and-conquer on the
/// tridiagonal (LAPACK dsyevd). Throws CapacityError above kDenseLimit.
DenseSpectrum dense_eigs(const SparseSymOperator& op);
DenseSpectrum dense_eigs(const Eigen::MatrixXd& symmetric);

/// Eigenvalues only, descending.
Eigen::VectorXd dense_eigenvalues(const SparseSymOperator& op);
Eigen::VectorXd dense_eigenvalues(const Eigen::MatrixXd& symmetric);

enum class Which { largest, smallest, both };

struct LanczosOptions {
  int k = 1;
  Which which = Which::largest;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  int max_iterations = 0;  // 0 means 10 k + 300 matrix-vector products
  int basis_size = 0;      // 0 means automatic
};

/// Extremal eigenpairs by Lanczos with full reorthogonalization and thick
/// restarts. `both` returns ceil(k/2) largest and floor(k/2) smallest.
/// Results are sorted by descending eigenvalue; every residual is at most
/// `tol` or ConvergenceError is thrown.
template <SymmetricOperator Op>
std::vector<EigenPair> lanczos_topk(const Op& op, const LanczosOptions& opt);

/// Output of the approximate-eigenpair perturbation estimate for a symmetric
/// M with a unique eigenvalue lambda in [lam_hat - delta, lam_hat + delta].
struct PerturbationBound {
  double epsilon = 0.0;        // ||(M - lam_hat) v||
  double shift = 0.0;          // <v, (M - lam_hat) v>
  double remainder = 0.0;      // |lambda - lam_hat - shift| <= remainder
  double window_low = 0.0;
  double window_high = 0.0;
  double vector_distance = 0.0;  // min over signs of ||w - sign v||
};

inline constexpr double kEigenvalueRemainderConstant = 2.0;
inline constexpr double kEigenvectorDistanceConstant = 4.0;

/// Throws ContractError when 5 epsilon > delta, and for n <= 1000 also when
/// the window does not contain exactly one eigenvalue.
PerturbationBound perturb_bound(const SparseSymOperator& op, double lam_hat,
                                const Eigen::VectorXd& v, double delta);

/// Stochastic (Hutchinson) estimate of the number of eigenvalues in
/// [lower, upper] from a Jackson-damped Chebyshev expansion.
struct EigenCountOptions {
  int moments = 256;
  int probes = 32;
  std::uint64_t seed = 0;
};
double estimate_eigen_count(const SparseSymOperator& op, double lower, double upper,
                            const EigenCountOptions& opt = {});

// ---------------------------------------------------------------------------

template <SymmetricOperator Op>
std::vector<EigenPair> lanczos_topk(const Op& op, const LanczosOptions& opt) {
  using Eigen::Index;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const Index n = op.rows();
  if (opt.k < 1) throw ParameterError("lanczos: k must be >= 1");
  if (!(opt.tol > 0.0)) throw ParameterError("lanczos: tol must be > 0");
  if (opt.k > n) throw ParameterError("lanczos: k exceeds dimension");

  const int want_high = opt.which == Which::smallest ? 0
                        : opt.which == Which::both   ? (opt.k + 1) / 2
                                                     : opt.k;
  const int want_low = opt.k - want_high;
  const int max_matvec = opt.max_iterations > 0 ? opt.max_iterations : 10 * opt.k + 300;
  const Index m = std::min<Index>(
      n, opt.basis_size > 0 ? opt.basis_size : std::max<Index>(3 * opt.k + 40, 100));

  Philox rng(opt.seed, 0x4c414e43ull);
  auto random_start = [&](const MatrixXd& basis, Index used) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      VectorXd v(n);
      for (Index i = 0; i < n; ++i) v[i] = rng.normal();
      if constexpr (ProjectingOperator<Op>) op.project(v);
      for (int pass = 0; pass < 2 && used > 0; ++pass)
        v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
      const double norm = v.norm();
      if (norm > 1e-8) return VectorXd(v / norm);
    }
    return VectorXd();
  };

  MatrixXd basis(n, m);
  MatrixXd projected = MatrixXd::Zero(m, m);
  {
    VectorXd v0 = random_start(basis, 0);
    if (v0.size() == 0) throw ParameterError("lanczos: operator has no active coordinates");
    basis.col(0) = v0;
  }

  Index used = 1;  // columns of `basis` in use; the last one awaits expansion
  int matvecs = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  VectorXd w(n);
  const double breakdown = 1e-12;

  for (;;) {
    // Expand column used-1.
    const Index j = used - 1;
    op.apply(basis.col(j), w);
    ++matvecs;
    VectorXd h = basis.leftCols(used).transpose() * w;
    w -= basis.leftCols(used) * h;
    const VectorXd h2 = basis.leftCols(used).transpose() * w;
    w -= basis.leftCols(used) * h2;
    h += h2;
    projected.col(j).head(used) = h;
    projected.row(j).head(used) = h.transpose();
    double beta = w.norm();

    const Index dim = used;
    const bool exhausted = dim == n;
    const bool full = dim == m;
    const bool check = full || exhausted || beta < breakdown || dim >= opt.k + 2 ||
                       matvecs >= max_matvec;
    if (!check) {
      basis.col(used) = w / beta;
      ++used;
      continue;
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> ritz(projected.topLeftCorner(dim, dim));
    const VectorXd& theta = ritz.eigenvalues();
    const MatrixXd& s = ritz.eigenvectors();
    std::vector<Index> wanted;
    for (int i = 0; i < want_high && i < dim; ++i) wanted.push_back(dim - 1 - i);
    for (int i = 0; i < want_low && dim - 1 - want_high - i >= 0; ++i) wanted.push_back(i);
    const bool enough = static_cast<int>(wanted.size()) == opt.k;

    double worst = 0.0;
    for (Index idx : wanted)
      worst = std::max(worst, std::abs(beta * s(dim - 1, idx)));
    if (enough) best_residual = std::min(best_residual, worst);

    if (enough && (worst <= 0.5 * opt.tol || exhausted)) {
      std::vector<EigenPair> out;
      double true_worst = 0.0;
      for (Index idx : wanted) {
        EigenPair p;
        p.value = theta[idx];
        p.vector = basis.leftCols(dim) * s.col(idx);
        p.vector.normalize();
        p.residual = residual_norm(op, p.value, p.vector);
        p.iterations = matvecs;
        p.method = SolverMethod::lanczos;
        true_worst = std::max(true_worst, p.residual);
        out.push_back(std::move(p));
      }
      if (true_worst <= opt.tol) {
        std::sort(out.begin(), out.end(),
                  [](const EigenPair& a, const EigenPair& b) { return a.value > b.value; });
        return out;
      }
      best_residual = std::min(best_residual, true_worst);
    }

    if (matvecs >= max_matvec)
      throw ConvergenceError("lanczos: no convergence after " + std::to_string(matvecs) +
                                 " matrix-vector products",
                             best_residual);

    if (exhausted)
      throw ConvergenceError("lanczos: Krylov space exhausted without convergence",
                             best_residual);
    if (beta < breakdown) {
      // Invariant subspace: continue from a fresh direction.
      VectorXd fresh = random_start(basis, used);
      if (fresh.size() == 0)
        throw ConvergenceError("lanczos: breakdown with no fresh direction", best_residual);
      if (!full) {
        basis.col(used) = fresh;
        ++used;
        continue;
      }
      w = fresh;
      beta = 1.0;
    }

    if (!full) {
      basis.col(used) = w / beta;
      ++used;
      continue;
    }

    // Thick restart: keep the wanted Ritz vectors plus neighbours on each side.
    const Index keep_total = std::min<Index>(dim - 1, std::max<Index>(opt.k + (m - opt.k) / 2, opt.k));
    Index keep_high = want_high, keep_low = want_low;
    for (Index extra = keep_total - opt.k; extra > 0; --extra) {
      if (want_low == 0 || (want_high > 0 && keep_high - want_high <= keep_low - want_low))
        ++keep_high;
      else
        ++keep_low;
    }
    std::vector<Index> kept;
    for (Index i = 0; i < keep_low; ++i) kept.push_back(i);
    for (Index i = 0; i < keep_high; ++i) kept.push_back(dim - keep_high + i);
    MatrixXd selection(dim, static_cast<Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) selection.col(c) = s.col(kept[c]);
    const MatrixXd compressed = basis.leftCols(dim) * selection;
    const Index kk = static_cast<Index>(kept.size());
    basis.leftCols(kk) = compressed;
    projected.setZero();
    for (Index c = 0; c < kk; ++c) projected(c, c) = theta[kept[c]];
    VectorXd next = w / beta;
    for (int pass = 0; pass < 2; ++pass)
      next -= basis.leftCols(kk) * (basis.leftCols(kk).transpose() * next);
    next.normalize();
    basis.col(kk) = next;
    used = kk + 1;
  }
}

}  // namespace mobility

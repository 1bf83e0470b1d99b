#include "mobility/eigensolvers.hpp"

#include <lapacke.h>

#include <cmath>
#include <numbers>

namespace mobility {

std::string_view to_string(SolverMethod m) {
  return m == SolverMethod::dense ? "dense" : "lanczos";
}

EigenPair DenseSpectrum::pair(Eigen::Index i) const {
  EigenPair p;
  p.value = values[i];
  p.vector = vectors.col(i);
  p.residual = residuals[i];
  p.iterations = 0;
  p.method = SolverMethod::dense;
  return p;
}

namespace {

void check_dense_size(Eigen::Index n) {
  if (n > kDenseLimit)
    throw CapacityError("dense_eigs: n = " + std::to_string(n) + " exceeds limit " +
                        std::to_string(kDenseLimit));
}

// Ascending LAPACK output -> descending.
void syevd(Eigen::MatrixXd& a, Eigen::VectorXd& w, bool vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  w.resize(n);
  if (n == 0) return;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n,
                                         a.data(), n, w.data());
  if (info != 0)
    throw ConvergenceError("dense_eigs: dsyevd failed with info " + std::to_string(info),
                           std::numeric_limits<double>::infinity());
  w.reverseInPlace();
  if (vectors) a.rowwise().reverseInPlace();
}

}  // namespace

DenseSpectrum dense_eigs(const Eigen::MatrixXd& symmetric) {
  check_dense_size(symmetric.rows());
  DenseSpectrum out;
  out.vectors = symmetric;
  syevd(out.vectors, out.values, true);
  out.residuals.resize(out.values.size());
  for (Eigen::Index i = 0; i < out.values.size(); ++i)
    out.residuals[i] =
        (symmetric * out.vectors.col(i) - out.values[i] * out.vectors.col(i)).norm();
  return out;
}

DenseSpectrum dense_eigs(const SparseSymOperator& op) {
  check_dense_size(op.rows());
  DenseSpectrum out;
  out.vectors = op.to_dense();
  syevd(out.vectors, out.values, true);
  out.residuals.resize(out.values.size());
  for (Eigen::Index i = 0; i < out.values.size(); ++i)
    out.residuals[i] = residual_norm(op, out.values[i], out.vectors.col(i));
  return out;
}

Eigen::VectorXd dense_eigenvalues(const Eigen::MatrixXd& symmetric) {
  check_dense_size(symmetric.rows());
  Eigen::MatrixXd a = symmetric;
  Eigen::VectorXd w;
  syevd(a, w, false);
  return w;
}

Eigen::VectorXd dense_eigenvalues(const SparseSymOperator& op) {
  return dense_eigenvalues(op.to_dense());
}

PerturbationBound perturb_bound(const SparseSymOperator& op, double lam_hat,
                                const Eigen::VectorXd& v, double delta) {
  if (v.size() != op.rows()) throw ParameterError("perturb_bound: length mismatch");
  if (!(delta > 0.0)) throw ParameterError("perturb_bound: delta must be > 0");
  const double norm = v.norm();
  if (std::abs(norm - 1.0) > 1e-8) throw ParameterError("perturb_bound: v must be a unit vector");

  const Eigen::VectorXd r = op * v - lam_hat * v;
  PerturbationBound b;
  b.epsilon = r.norm();
  if (5.0 * b.epsilon > delta)
    throw ContractError("perturb_bound: 5 * epsilon exceeds delta");
  if (op.rows() <= 1000) {
    const Eigen::VectorXd eig = dense_eigenvalues(op);
    const auto inside = (((eig.array() - lam_hat).abs()) <= delta).count();
    if (inside != 1)
      throw ContractError("perturb_bound: window holds " + std::to_string(inside) +
                          " eigenvalues, expected exactly one");
  }
  b.shift = v.dot(r);
  b.remainder = kEigenvalueRemainderConstant * b.epsilon * b.epsilon / delta;
  b.window_low = lam_hat + b.shift - b.remainder;
  b.window_high = lam_hat + b.shift + b.remainder;
  b.vector_distance = kEigenvectorDistanceConstant * b.epsilon / delta;
  return b;
}

double estimate_eigen_count(const SparseSymOperator& op, double lower, double upper,
                            const EigenCountOptions& opt) {
  if (!(upper > lower)) throw ParameterError("eigen count: require upper > lower");
  if (opt.moments < 2 || opt.probes < 1) throw ParameterError("eigen count: bad options");
  const Graph& g = op.graph();
  const Eigen::Index n = op.rows();
  Vertex max_degree = 0;
  for (Vertex x = 0; x < g.size(); ++x) max_degree = std::max(max_degree, g.degree(x));
  // Gershgorin bound on the spectrum, padded so the endpoints stay inside (-1, 1).
  const double radius = std::max(1e-12, max_degree * op.scale()) * 1.01;
  const double lo = std::clamp(lower / radius, -1.0, 1.0);
  const double hi = std::clamp(upper / radius, -1.0, 1.0);
  const double acos_lo = std::acos(lo);
  const double acos_hi = std::acos(hi);
  const int moments = opt.moments;

  std::vector<double> mu(static_cast<std::size_t>(moments), 0.0);
  Philox rng(opt.seed, 0x4b504dull);
  Eigen::VectorXd probe(n), t_prev(n), t_cur(n), t_next(n);
  for (int p = 0; p < opt.probes; ++p) {
    for (Eigen::Index i = 0; i < n; ++i) probe[i] = (rng() >> 63) ? 1.0 : -1.0;
    t_prev = probe;
    op.apply(probe, t_cur);
    t_cur /= radius;
    mu[0] += probe.dot(t_prev);
    mu[1] += probe.dot(t_cur);
    for (int k = 2; k < moments; ++k) {
      op.apply(t_cur, t_next);
      t_next = (2.0 / radius) * t_next - t_prev;
      mu[k] += probe.dot(t_next);
      std::swap(t_prev, t_cur);
      std::swap(t_cur, t_next);
    }
  }
  for (double& m : mu) m /= opt.probes;

  double count = 0.0;
  const double kpi = std::numbers::pi / (moments + 1);
  for (int k = 0; k < moments; ++k) {
    const double jackson = ((moments - k + 1) * std::cos(k * kpi) +
                            std::sin(k * kpi) / std::tan(kpi)) /
                           (moments + 1);
    const double coeff = k == 0 ? (acos_lo - acos_hi) / std::numbers::pi
                                : 2.0 * (std::sin(k * acos_lo) - std::sin(k * acos_hi)) /
                                      (k * std::numbers::pi);
    count += jackson * coeff * mu[static_cast<std::size_t>(k)];
  }
  return count;
}

}  // namespace mobility

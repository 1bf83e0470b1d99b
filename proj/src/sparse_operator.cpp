#include "mobility/sparse_operator.hpp"

#include <cmath>

#include "mobility/errors.hpp"

namespace mobility {

SparseSymOperator::SparseSymOperator(const Graph& g, double d) : graph_(&g), d_(d) {
  if (!(d > 0.0)) throw ParameterError("operator: d must be > 0");
  scale_ = 1.0 / std::sqrt(d);
}

Eigen::Index SparseSymOperator::active_count() const {
  if (active_.empty()) return rows();
  Eigen::Index c = 0;
  for (auto a : active_) c += a;
  return c;
}

void SparseSymOperator::apply(const Eigen::Ref<const Eigen::VectorXd>& v,
                              Eigen::Ref<Eigen::VectorXd> out) const {
  const Vertex n = graph_->size();
  if (v.size() != n || out.size() != n) throw ParameterError("matvec: length mismatch");
  if (active_.empty()) {
    for (Vertex x = 0; x < n; ++x) {
      double acc = 0.0;
      for (Vertex y : graph_->neighbors(x)) acc += v[y];
      out[x] = scale_ * acc;
    }
    return;
  }
  for (Vertex x = 0; x < n; ++x) {
    if (!active_[x]) {
      out[x] = 0.0;
      continue;
    }
    double acc = 0.0;
    for (Vertex y : graph_->neighbors(x))
      if (active_[y]) acc += v[y];
    out[x] = scale_ * acc;
  }
}

Eigen::VectorXd SparseSymOperator::operator*(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(rows());
  apply(v, out);
  return out;
}

void SparseSymOperator::project(Eigen::Ref<Eigen::VectorXd> v) const {
  if (active_.empty()) return;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!active_[i]) v[i] = 0.0;
}

Eigen::MatrixXd SparseSymOperator::to_dense() const {
  const Vertex n = graph_->size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Vertex x = 0; x < n; ++x) {
    if (!active(x)) continue;
    for (Vertex y : graph_->neighbors(x))
      if (active(y)) m(x, y) = scale_;
  }
  return m;
}

Eigen::MatrixXd SparseSymOperator::to_dense_active(VertexSet& ids) const {
  const Vertex n = graph_->size();
  ids.clear();
  std::vector<Eigen::Index> local(static_cast<std::size_t>(n), -1);
  for (Vertex x = 0; x < n; ++x)
    if (active(x)) {
      local[x] = static_cast<Eigen::Index>(ids.size());
      ids.push_back(x);
    }
  const auto m = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Vertex y : graph_->neighbors(ids[i]))
      if (local[y] >= 0) out(i, local[y]) = scale_;
  return out;
}

namespace {

void check_ids(const Graph& g, const VertexSet& set) {
  for (Vertex v : set)
    if (v < 0 || v >= g.size())
      throw ParameterError("operator: vertex id " + std::to_string(v) + " out of range");
}

}  // namespace

SparseSymOperator build_operator(const Graph& g, double d, const VertexSet& removed) {
  SparseSymOperator op(g, d);
  check_ids(g, removed);
  if (!removed.empty()) {
    op.kind_ = SparseSymOperator::MaskKind::removed;
    op.active_.assign(static_cast<std::size_t>(g.size()), 1);
    for (Vertex v : removed) op.active_[v] = 0;
  }
  return op;
}

SparseSymOperator restrict_operator(const Graph& g, double d, const VertexSet& kept) {
  SparseSymOperator op(g, d);
  check_ids(g, kept);
  op.kind_ = SparseSymOperator::MaskKind::restricted;
  op.active_.assign(static_cast<std::size_t>(g.size()), 0);
  for (Vertex v : kept) op.active_[v] = 1;
  return op;
}

}  // namespace mobility

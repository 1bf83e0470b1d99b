#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mobility/graph.hpp"

namespace mobility {

/// H = A / sqrt(d) acting on R^n, optionally masked. The mask is a bitmap of
/// active coordinates; inactive rows and columns are zero, which realizes
/// both H^{(X)} (X removed) and H|_X (complement removed).
///
/// The operator keeps a pointer to the graph, which must outlive it.
class SparseSymOperator {
 public:
  enum class MaskKind { none, removed, restricted };

  SparseSymOperator(const Graph& g, double d);

  Eigen::Index rows() const { return graph_->size(); }
  Eigen::Index cols() const { return graph_->size(); }
  double scale() const { return scale_; }
  double d() const { return d_; }
  const Graph& graph() const { return *graph_; }
  MaskKind mask_kind() const { return kind_; }

  bool active(Vertex x) const { return active_.empty() || active_[x] != 0; }
  Eigen::Index active_count() const;

  /// out = H v. `out` must not alias `v`.
  void apply(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd operator*(const Eigen::VectorXd& v) const;

  /// Zeroes inactive coordinates in place.
  void project(Eigen::Ref<Eigen::VectorXd> v) const;

  /// Dense n x n matrix including the zeroed rows.
  Eigen::MatrixXd to_dense() const;
  /// Dense matrix on the active coordinates only, with their ids.
  Eigen::MatrixXd to_dense_active(VertexSet& ids) const;

  friend SparseSymOperator build_operator(const Graph&, double, const VertexSet&);
  friend SparseSymOperator restrict_operator(const Graph&, double, const VertexSet&);

 private:
  const Graph* graph_;
  double d_;
  double scale_;
  MaskKind kind_ = MaskKind::none;
  std::vector<std::uint8_t> active_;
};

/// Operator realizing H^{(removed)}; an empty set gives H.
SparseSymOperator build_operator(const Graph& g, double d, const VertexSet& removed = {});

/// Operator realizing H|_{kept}.
SparseSymOperator restrict_operator(const Graph& g, double d, const VertexSet& kept);

}  // namespace mobility

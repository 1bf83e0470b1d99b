#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mobility {

using Vertex = std::int32_t;

/// Sorted ascending sequence of distinct vertex ids.
using VertexSet = std::vector<Vertex>;

struct GraphMeta {
  std::int64_t n = 0;
  double d = 0.0;
  std::uint64_t seed = 0;
  std::string rng;
};

/// Immutable undirected simple graph in CSR layout. Neighbour lists are
/// sorted ascending; vertex ids are 0..n-1.
class Graph {
 public:
  Graph() = default;

  /// Builds from an arbitrary edge list. Self-loops are rejected; duplicate
  /// edges are merged.
  static Graph from_edges(Vertex n, std::span<const std::pair<Vertex, Vertex>> edges,
                          std::optional<GraphMeta> meta = std::nullopt);

  Vertex size() const { return static_cast<Vertex>(offsets_.size()) - 1; }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(targets_.size()) / 2; }

  std::span<const Vertex> neighbors(Vertex x) const {
    return {targets_.data() + offsets_[x], targets_.data() + offsets_[x + 1]};
  }
  Vertex degree(Vertex x) const { return static_cast<Vertex>(offsets_[x + 1] - offsets_[x]); }
  bool adjacent(Vertex x, Vertex y) const;

  const std::optional<GraphMeta>& meta() const { return meta_; }

  /// All edges (u, v) with u < v in ascending lexicographic order.
  std::vector<std::pair<Vertex, Vertex>> edges() const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.offsets_ == b.offsets_ && a.targets_ == b.targets_;
  }

 private:
  std::vector<std::int64_t> offsets_{0};
  std::vector<Vertex> targets_;
  std::optional<GraphMeta> meta_;
};

/// Erdos-Renyi G(n, d/n) by geometric skipping over the pair stream.
Graph generate(Vertex n, double d, std::uint64_t seed);

/// Distances from `source`, -1 for vertices farther than `max_radius` or
/// unreachable. A negative `max_radius` means unbounded.
std::vector<std::int32_t> bfs_distances(const Graph& g, Vertex source, int max_radius = -1);

/// Spheres S_0(x), ..., S_r(x), each sorted ascending.
std::vector<VertexSet> spheres(const Graph& g, Vertex x, int r);
VertexSet ball(const Graph& g, Vertex x, int r);
VertexSet sphere(const Graph& g, Vertex x, int r);

/// alpha_x = deg(x) / d.
Eigen::VectorXd normalized_degrees(const Graph& g, double d);

/// Whether the subgraph induced on B_r(x) is a tree.
bool is_tree_ball(const Graph& g, Vertex x, int r);

/// Largest connected component; ties go to the component containing the
/// smallest vertex id.
VertexSet giant_component(const Graph& g);

enum class DiameterMode { automatic, exact, double_sweep };

/// Diameter of the giant component. `exact` is the all-pairs eccentricity
/// maximum (computed by eccentricity bounding, which visits far fewer
/// sources). `double_sweep` is a lower bound. `automatic` is exact up to
/// 2e4 vertices.
int diameter(const Graph& g, DiameterMode mode = DiameterMode::automatic);

bool contains(const VertexSet& set, Vertex v);
VertexSet set_difference(const VertexSet& a, const VertexSet& b);
VertexSet set_union(const VertexSet& a, const VertexSet& b);

/// Edge-list text format: optional `# n=<n> d=<d> seed=<seed>` header, then
/// one `u v` line per edge with u < v in ascending order.
void write_edge_list(std::ostream& out, const Graph& g);
Graph read_edge_list(std::istream& in);

}  // namespace mobility

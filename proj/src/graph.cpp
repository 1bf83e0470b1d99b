#include "mobility/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mobility/errors.hpp"
#include "mobility/rng.hpp"

namespace mobility {

Graph Graph::from_edges(Vertex n, std::span<const std::pair<Vertex, Vertex>> edges,
                        std::optional<GraphMeta> meta) {
  if (n < 0) throw ParameterError("graph: negative vertex count");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n) + 1, 0);
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw ParameterError("graph: edge endpoint out of range");
    if (u == v) throw ParameterError("graph: self-loop at vertex " + std::to_string(u));
    ++counts[u + 1];
    ++counts[v + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  std::vector<Vertex> targets(static_cast<std::size_t>(counts.back()));
  std::vector<std::int64_t> fill(counts.begin(), counts.end() - 1);
  for (auto [u, v] : edges) {
    targets[fill[u]++] = v;
    targets[fill[v]++] = u;
  }

  Graph g;
  g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  g.targets_.reserve(targets.size());
  for (Vertex x = 0; x < n; ++x) {
    auto first = targets.begin() + counts[x];
    auto last = targets.begin() + counts[x + 1];
    std::sort(first, last);
    last = std::unique(first, last);
    g.targets_.insert(g.targets_.end(), first, last);
    g.offsets_[x + 1] = static_cast<std::int64_t>(g.targets_.size());
  }
  g.meta_ = std::move(meta);
  return g;
}

bool Graph::adjacent(Vertex x, Vertex y) const {
  auto nb = neighbors(x);
  return std::binary_search(nb.begin(), nb.end(), y);
}

std::vector<std::pair<Vertex, Vertex>> Graph::edges() const {
  std::vector<std::pair<Vertex, Vertex>> out;
  out.reserve(static_cast<std::size_t>(edge_count()));
  for (Vertex u = 0; u < size(); ++u)
    for (Vertex v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

Graph generate(Vertex n, double d, std::uint64_t seed) {
  if (n < 1) throw ParameterError("generate: n must be >= 1");
  if (!(d >= 0.0) || d > n) throw ParameterError("generate: require 0 <= d <= n");
  const double p = d / n;
  GraphMeta meta{n, d, seed, std::string(Philox::algorithm)};
  std::vector<std::pair<Vertex, Vertex>> edges;

  if (p >= 1.0) {
    for (Vertex v = 1; v < n; ++v)
      for (Vertex w = 0; w < v; ++w) edges.emplace_back(w, v);
  } else if (p > 0.0) {
    // Batagelj-Brandes skipping over pairs (v, w), w < v, in row order.
    edges.reserve(static_cast<std::size_t>(1.1 * d * n / 2 + 16));
    Philox rng(seed, 0);
    const double log_q = std::log1p(-p);
    std::int64_t v = 1;
    std::int64_t w = -1;
    while (v < n) {
      const double skip = std::floor(std::log(rng.uniform_open_low()) / log_q);
      w += 1 + static_cast<std::int64_t>(std::min(skip, 4.0e18));
      while (w >= v && v < n) {
        w -= v;
        ++v;
      }
      if (v < n) edges.emplace_back(static_cast<Vertex>(w), static_cast<Vertex>(v));
    }
  }
  return Graph::from_edges(n, edges, meta);
}

std::vector<std::int32_t> bfs_distances(const Graph& g, Vertex source, int max_radius) {
  if (source < 0 || source >= g.size()) throw ParameterError("bfs: vertex out of range");
  std::vector<std::int32_t> dist(static_cast<std::size_t>(g.size()), -1);
  std::vector<Vertex> queue;
  queue.reserve(256);
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Vertex x = queue[head];
    if (max_radius >= 0 && dist[x] >= max_radius) continue;
    for (Vertex y : g.neighbors(x)) {
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
    }
  }
  return dist;
}

std::vector<VertexSet> spheres(const Graph& g, Vertex x, int r) {
  if (x < 0 || x >= g.size()) throw ParameterError("spheres: vertex out of range");
  if (r < 0) throw ParameterError("spheres: negative radius");
  std::vector<VertexSet> layers(static_cast<std::size_t>(r) + 1);
  layers[0] = {x};
  // Local visited set: balls are usually tiny compared with n.
  std::vector<Vertex> seen{x};
  auto visited = [&](Vertex y) {
    return std::binary_search(seen.begin(), seen.end(), y);
  };
  for (int i = 1; i <= r; ++i) {
    VertexSet next;
    for (Vertex u : layers[i - 1])
      for (Vertex y : g.neighbors(u))
        if (!visited(y)) next.push_back(y);
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    VertexSet merged;
    merged.reserve(seen.size() + next.size());
    std::merge(seen.begin(), seen.end(), next.begin(), next.end(), std::back_inserter(merged));
    seen = std::move(merged);
    layers[i] = std::move(next);
  }
  return layers;
}

VertexSet ball(const Graph& g, Vertex x, int r) {
  VertexSet out;
  for (const auto& s : spheres(g, x, r)) out.insert(out.end(), s.begin(), s.end());
  std::sort(out.begin(), out.end());
  return out;
}

VertexSet sphere(const Graph& g, Vertex x, int r) { return spheres(g, x, r).back(); }

Eigen::VectorXd normalized_degrees(const Graph& g, double d) {
  if (!(d > 0.0)) throw ParameterError("normalized_degrees: d must be > 0");
  Eigen::VectorXd alpha(g.size());
  for (Vertex x = 0; x < g.size(); ++x) alpha[x] = g.degree(x) / d;
  return alpha;
}

bool is_tree_ball(const Graph& g, Vertex x, int r) {
  const VertexSet b = ball(g, x, r);
  std::int64_t twice_edges = 0;
  for (Vertex u : b)
    for (Vertex y : g.neighbors(u))
      if (contains(b, y)) ++twice_edges;
  return twice_edges / 2 == static_cast<std::int64_t>(b.size()) - 1;
}

VertexSet giant_component(const Graph& g) {
  const Vertex n = g.size();
  std::vector<std::int32_t> label(static_cast<std::size_t>(n), -1);
  std::vector<Vertex> queue;
  std::int32_t best_label = -1;
  std::size_t best_size = 0;
  std::int32_t next_label = 0;
  for (Vertex s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    queue.assign(1, s);
    label[s] = next_label;
    for (std::size_t head = 0; head < queue.size(); ++head)
      for (Vertex y : g.neighbors(queue[head]))
        if (label[y] < 0) {
          label[y] = next_label;
          queue.push_back(y);
        }
    if (queue.size() > best_size) {
      best_size = queue.size();
      best_label = next_label;
    }
    ++next_label;
  }
  VertexSet out;
  out.reserve(best_size);
  for (Vertex x = 0; x < n; ++x)
    if (label[x] == best_label) out.push_back(x);
  return out;
}

namespace {

std::pair<Vertex, int> farthest(const std::vector<std::int32_t>& dist) {
  Vertex arg = 0;
  int best = -1;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] > best) {
      best = dist[i];
      arg = static_cast<Vertex>(i);
    }
  return {arg, best};
}

int bounding_diameter(const Graph& g, const VertexSet& comp) {
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> lower(comp.size(), 0);
  std::vector<int> upper(comp.size(), kInf);
  std::vector<std::size_t> alive(comp.size());
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  int diam_low = 0;
  bool pick_high = true;
  while (!alive.empty()) {
    std::size_t pick = alive.front();
    for (std::size_t k : alive) {
      if (pick_high ? upper[k] > upper[pick] : lower[k] < lower[pick]) pick = k;
    }
    pick_high = !pick_high;
    const auto dist = bfs_distances(g, comp[pick]);
    const int ecc = farthest(dist).second;
    diam_low = std::max(diam_low, ecc);
    std::vector<std::size_t> keep;
    keep.reserve(alive.size());
    for (std::size_t k : alive) {
      const int dv = dist[comp[k]];
      lower[k] = std::max(lower[k], std::max(ecc - dv, dv));
      upper[k] = std::min(upper[k], ecc + dv);
      if (k != pick && upper[k] > diam_low && lower[k] != upper[k]) keep.push_back(k);
      if (k != pick && lower[k] == upper[k]) diam_low = std::max(diam_low, lower[k]);
    }
    alive = std::move(keep);
  }
  return diam_low;
}

}  // namespace

int diameter(const Graph& g, DiameterMode mode) {
  if (g.size() == 0) throw ParameterError("diameter: empty graph");
  const VertexSet comp = giant_component(g);
  if (mode == DiameterMode::automatic)
    mode = g.size() <= 20000 ? DiameterMode::exact : DiameterMode::double_sweep;
  if (mode == DiameterMode::exact) return bounding_diameter(g, comp);
  const auto [far, first_ecc] = farthest(bfs_distances(g, comp.front()));
  const int second_ecc = farthest(bfs_distances(g, far)).second;
  return std::max(first_ecc, second_ecc);
}

bool contains(const VertexSet& set, Vertex v) {
  return std::binary_search(set.begin(), set.end(), v);
}

VertexSet set_difference(const VertexSet& a, const VertexSet& b) {
  VertexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

VertexSet set_union(const VertexSet& a, const VertexSet& b) {
  VertexSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void write_edge_list(std::ostream& out, const Graph& g) {
  if (const auto& m = g.meta()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", m->d);
    out << "# n=" << m->n << " d=" << buf << " seed=" << m->seed << '\n';
  } else {
    out << "# n=" << g.size() << '\n';
  }
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

Graph read_edge_list(std::istream& in) {
  std::optional<GraphMeta> meta;
  std::optional<std::int64_t> header_n;
  std::vector<std::pair<Vertex, Vertex>> edges;
  Vertex max_id = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string field;
      GraphMeta m;
      bool has_d = false, has_seed = false;
      while (hs >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq);
        const std::string val = field.substr(eq + 1);
        if (key == "n") header_n = std::stoll(val);
        if (key == "d") { m.d = std::stod(val); has_d = true; }
        if (key == "seed") { m.seed = std::stoull(val); has_seed = true; }
      }
      if (header_n && has_d && has_seed) {
        m.n = *header_n;
        m.rng = std::string(Philox::algorithm);
        meta = m;
      }
      continue;
    }
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u >> v)) throw ParameterError("edge list: malformed line '" + line + "'");
    if (u < 0 || v < 0 || u > std::numeric_limits<Vertex>::max() ||
        v > std::numeric_limits<Vertex>::max())
      throw ParameterError("edge list: vertex id out of range");
    edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
    max_id = std::max<Vertex>(max_id, static_cast<Vertex>(std::max(u, v)));
  }
  const Vertex n = header_n ? static_cast<Vertex>(*header_n) : max_id + 1;
  return Graph::from_edges(n, edges, meta);
}

}  // namespace mobility

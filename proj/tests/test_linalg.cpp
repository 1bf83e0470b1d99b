#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"

#include "mobility/eigensolvers.hpp"
#include "mobility/errors.hpp"
#include "mobility/graph.hpp"
#include "mobility/krylov.hpp"
#include "mobility/sparse_operator.hpp"

using namespace mobility;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Graph make(Vertex n, std::vector<std::pair<Vertex, Vertex>> edges) {
  return Graph::from_edges(n, edges);
}

Graph star(Vertex leaves) {
  std::vector<std::pair<Vertex, Vertex>> e;
  for (Vertex i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return make(leaves + 1, e);
}

Graph complete(Vertex n) {
  std::vector<std::pair<Vertex, Vertex>> e;
  for (Vertex i = 0; i < n; ++i)
    for (Vertex j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return make(n, e);
}

VectorXd unit(Eigen::Index n, Eigen::Index i) {
  VectorXd e = VectorXd::Zero(n);
  e[i] = 1;
  return e;
}

VectorXd random_vector(Eigen::Index n, Philox& rng) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// Dense adjacency / sqrt(d) assembled independently of the operator.
MatrixXd explicit_matrix(const Graph& g, double d) {
  MatrixXd m = MatrixXd::Zero(g.size(), g.size());
  for (auto [u, v] : g.edges()) m(u, v) = m(v, u) = 1 / std::sqrt(d);
  return m;
}

}  // namespace

TEST_CASE("build_operator and matvec") {
  const Graph e = make(2, {{0, 1}});
  CHECK((build_operator(e, 1) * unit(2, 0) - unit(2, 1)).norm() == 0.0);
  CHECK((build_operator(e, 4) * unit(2, 0) - 0.5 * unit(2, 1)).norm() == 0.0);
  CHECK((build_operator(e, 1, {1}) * unit(2, 0)).norm() == 0.0);
  CHECK_THROWS_AS(build_operator(e, 1, {2}), ParameterError);
  CHECK_THROWS_AS(build_operator(e, 0), ParameterError);
  CHECK_THROWS_AS(restrict_operator(e, 1, {-1}), ParameterError);

  const Graph k4g = complete(4);
  const auto k4 = build_operator(k4g, 1);
  CHECK((k4 * VectorXd::Ones(4) - 3 * VectorXd::Ones(4)).norm() == 0.0);
  CHECK((k4 * VectorXd::Zero(4)).norm() == 0.0);
  VectorXd out(4);
  CHECK_THROWS(k4.apply(VectorXd::Ones(3), out));
}

TEST_CASE("operator symmetry and masking on random graphs") {
  Philox rng(3);
  const Graph g = generate(1500, 6, 4);
  const VertexSet removed{3, 17, 400, 1499};
  for (const auto& op : {build_operator(g, 6), build_operator(g, 6, removed),
                         restrict_operator(g, 6, removed)}) {
    for (int t = 0; t < 5; ++t) {
      const VectorXd u = random_vector(1500, rng), v = random_vector(1500, rng);
      const double lhs = u.dot(op * v), rhs = (op * u).dot(v);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
  const auto masked = build_operator(g, 6, removed);
  const VectorXd hv = masked * VectorXd::Ones(1500);
  for (Vertex x : removed) {
    CHECK(hv[x] == 0.0);
    CHECK((masked * unit(1500, x)).norm() == 0.0);
  }
}

TEST_CASE("dense_eigs examples") {
  const auto zero = dense_eigs(build_operator(make(5, {}), 1));
  CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);

  const auto edge = dense_eigs(build_operator(make(4, {{1, 2}}), 1));
  CHECK(edge.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(edge.values[3] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(edge.values[1]) < 1e-14);

  // Star K_{1,k}: on span{e_center, leaf average} H acts as [[0, sqrt k], [sqrt k, 0]].
  for (int k : {3, 10, 50}) {
    MatrixXd reduced(2, 2);
    reduced << 0, std::sqrt(double(k)), std::sqrt(double(k)), 0;
    const VectorXd oracle = Eigen::SelfAdjointEigenSolver<MatrixXd>(reduced).eigenvalues();
    const auto s = dense_eigs(build_operator(star(k), 1));
    CHECK(s.values[0] == doctest::Approx(oracle[1]).epsilon(1e-13));
    CHECK(s.values[s.size() - 1] == doctest::Approx(oracle[0]).epsilon(1e-13));
  }
  CHECK_THROWS_AS(dense_eigs(build_operator(make(4001, {}), 1)), CapacityError);
}

TEST_CASE("dense_eigs residuals and ordering") {
  const Graph g = generate(600, 5, 8);
  const auto s = dense_eigs(build_operator(g, 5));
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (i > 0) CHECK(s.values[i] <= s.values[i - 1]);
    CHECK(s.residuals[i] <= 1e-9 * std::max(1.0, std::abs(s.values[i])));
    CHECK(s.vectors.col(i).norm() == doctest::Approx(1.0).epsilon(1e-10));
  }
  const auto p = s.pair(0);
  CHECK(p.method == SolverMethod::dense);
  CHECK(p.residual == s.residuals[0]);
}

TEST_CASE("lanczos examples") {
  const auto k4 = lanczos_topk(build_operator(complete(4), 1), {.k = 1});
  CHECK(k4[0].value == doctest::Approx(3.0).epsilon(1e-12));

  const auto st = lanczos_topk(build_operator(star(100), 1), {.k = 2, .which = Which::both});
  REQUIRE(st.size() == 2);
  CHECK(st[0].value == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(st[1].value == doctest::Approx(-10.0).epsilon(1e-12));

  const Graph g = generate(2000, 8, 1);
  const auto op = build_operator(g, 8);
  const VectorXd dense = dense_eigenvalues(op);
  const auto top = lanczos_topk(op, {.k = 5});
  REQUIRE(top.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(top[i].value - dense[i]) <= 1e-8);
    CHECK(top[i].residual <= 1e-10);
    CHECK(residual_norm(op, top[i].value, top[i].vector) <= top[i].residual + 1e-15);
    CHECK(top[i].vector.norm() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(top[i].method == SolverMethod::lanczos);
  }
  const auto low = lanczos_topk(op, {.k = 3, .which = Which::smallest});
  for (int i = 0; i < 3; ++i) CHECK(std::abs(low[i].value - dense[dense.size() - 3 + i]) <= 1e-8);

  CHECK_THROWS_AS(lanczos_topk(op, {.k = 0}), ParameterError);
  CHECK_THROWS_AS(lanczos_topk(op, {.k = 1, .tol = 0}), ParameterError);
}

TEST_CASE("lanczos determinism and convergence failure") {
  const Graph g = generate(2000, 8, 2);
  const auto op = build_operator(g, 8);
  const auto a = lanczos_topk(op, {.k = 3, .seed = 9});
  const auto b = lanczos_topk(op, {.k = 3, .seed = 9});
  for (int i = 0; i < 3; ++i) {
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].vector == b[i].vector);
  }
  try {
    lanczos_topk(op, {.k = 5, .tol = 1e-14, .max_iterations = 12});
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::isfinite(e.best_residual()));
    CHECK(e.best_residual() > 0);
  }
}

TEST_CASE("oracle equivalence on 50 random graphs") {
  Philox rng(77);
  for (int t = 0; t < 50; ++t) {
    const Vertex n = 200 + static_cast<Vertex>(rng() % 801);
    const double d = 3 + 7 * rng.uniform();
    const Graph g = generate(n, d, 1000 + t);
    const auto op = build_operator(g, d);
    const VectorXd dense = dense_eigenvalues(op);
    const auto top = lanczos_topk(op, {.k = 3, .seed = static_cast<std::uint64_t>(t)});
    for (int i = 0; i < 3; ++i) CHECK(std::abs(top[i].value - dense[i]) <= 1e-8);
  }
}

TEST_CASE("masking equals explicit deletion") {
  Philox rng(5);
  for (int t = 0; t < 10; ++t) {
    const Graph g = generate(400, 5, 50 + t);
    VertexSet removed;
    for (Vertex x = 0; x < 400; ++x)
      if (rng.uniform() < 0.1) removed.push_back(x);
    const MatrixXd full = explicit_matrix(g, 5);
    std::vector<Eigen::Index> keep;
    for (Vertex x = 0; x < 400; ++x)
      if (!contains(removed, x)) keep.push_back(x);
    MatrixXd sub(keep.size(), keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
      for (std::size_t j = 0; j < keep.size(); ++j) sub(i, j) = full(keep[i], keep[j]);
    VectorXd expected(400);
    expected.head(keep.size()) = Eigen::SelfAdjointEigenSolver<MatrixXd>(sub).eigenvalues();
    expected.tail(removed.size()).setZero();
    std::sort(expected.data(), expected.data() + 400, std::greater<>());
    const VectorXd got = dense_eigenvalues(build_operator(g, 5, removed));
    CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("interlacing under single-vertex removal") {
  for (int t = 0; t < 10; ++t) {
    const Graph g = generate(300, 4, 200 + t);
    const VectorXd full = dense_eigenvalues(build_operator(g, 4));
    const Vertex x = static_cast<Vertex>(t * 29 % 300);
    const double l1 = dense_eigenvalues(build_operator(g, 4, {x}))[0];
    CHECK(full[1] <= l1 + 1e-12);
    CHECK(l1 <= full[0] + 1e-12);
  }
}

TEST_CASE("perturb_bound") {
  const Graph e = make(2, {{0, 1}});
  const auto op = build_operator(e, 1);
  VectorXd exact(2);
  exact << 1, 1;
  exact.normalize();
  const auto zero = perturb_bound(op, 1.0, exact, 1.0);
  CHECK(zero.epsilon == doctest::Approx(0.0));
  CHECK(zero.vector_distance == doctest::Approx(0.0));

  double last_eps = -1, last_bound = -1;
  for (double delta_entry : {1e-4, 1e-3, 1e-2, 5e-2}) {
    VectorXd v = exact;
    v[0] += delta_entry;
    v.normalize();
    const auto pb = perturb_bound(op, 1.0, v, 1.0);
    const double true_distance = std::min((exact - v).norm(), (exact + v).norm());
    CHECK(pb.vector_distance >= true_distance);
    CHECK(pb.vector_distance >= 0);
    CHECK(pb.epsilon > last_eps);
    CHECK(pb.vector_distance >= last_bound);
    CHECK(std::abs(1.0 - (1.0 + pb.shift)) <= pb.remainder + 1e-15);
    CHECK(pb.window_low <= 1.0);
    CHECK(pb.window_high >= 1.0);
    last_eps = pb.epsilon;
    last_bound = pb.vector_distance;
  }
  VectorXd far = VectorXd::Zero(2);
  far[0] = 1;
  CHECK_THROWS_AS(perturb_bound(op, 1.0, far, 1.0), ContractError);
  // Window holding both eigenvalues.
  CHECK_THROWS_AS(perturb_bound(op, 1.0, exact, 2.5), ContractError);
}

TEST_CASE("stochastic eigenvalue count tracks the dense count") {
  const Graph g = generate(1000, 6, 12);
  const auto op = build_operator(g, 6);
  const VectorXd vals = dense_eigenvalues(op);
  for (auto [lo, hi] : {std::pair{-1.0, 1.0}, std::pair{1.5, 2.5}, std::pair{-3.0, 0.0}}) {
    const double exact = static_cast<double>((vals.array() >= lo && vals.array() <= hi).count());
    const double est = estimate_eigen_count(op, lo, hi, {.moments = 400, .probes = 64, .seed = 3});
    CHECK(std::abs(est - exact) <= std::max(15.0, 0.06 * exact));
  }
}

TEST_CASE("minres and green_diagonal") {
  const Graph g = generate(300, 4, 31);
  const VertexSet removed{0, 5, 9};
  const auto op = build_operator(g, 4, removed);
  const double z = 2.3;
  VertexSet ids;
  const MatrixXd active = op.to_dense_active(ids);
  const MatrixXd inv =
      (active - z * MatrixXd::Identity(active.rows(), active.cols())).inverse();
  for (std::size_t i = 0; i < ids.size(); i += 37)
    CHECK(green_diagonal(op, z, ids[i], 1e-12) == doctest::Approx(inv(i, i)).epsilon(1e-9));

  VectorXd rhs = VectorXd::Ones(50);
  MatrixXd a = MatrixXd::Random(50, 50);
  a = (a + a.transpose()).eval();  // indefinite
  const auto res = minres([&](const VectorXd& v, VectorXd& out) { out = a * v; }, rhs, 1e-12, 500);
  CHECK(res.converged);
  CHECK((a * res.x - rhs).norm() <= 1e-10);
}

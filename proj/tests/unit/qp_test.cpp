#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "epsteer/sqp.hpp"
#include "../support/oracles.hpp"

using namespace epsteer;

TEST_CASE("unconstrained QP is a linear solve", "[qp]") {
  QpProblem p;
  p.Q = Eigen::Matrix2d{{2.0, 0.0}, {0.0, 4.0}};
  p.q = Eigen::Vector2d{-2.0, -8.0};
  p.G.resize(0, 2);
  p.h.resize(0);
  const auto r = solve_qp(p);
  CHECK(r.converged);
  CHECK((r.z - Eigen::Vector2d{1.0, 2.0}).norm() < 1e-12);
}

TEST_CASE("projection onto a half-plane", "[qp]") {
  // min |z - (2, 2)|^2 / 2  s.t.  -z0 - z1 >= -2   ->  (1, 1)
  QpProblem p;
  p.Q = Eigen::Matrix2d::Identity();
  p.q = Eigen::Vector2d{-2.0, -2.0};
  p.G = Eigen::RowVector2d{-1.0, -1.0};
  p.h = Eigen::VectorXd::Constant(1, -2.0);
  const auto r = solve_qp(p);
  CHECK(r.converged);
  CHECK((r.z - Eigen::Vector2d{1.0, 1.0}).norm() < 1e-8);
  CHECK(std::abs(r.lambda[0] - 1.0) < 1e-8);
}

TEST_CASE("interior point matches active-set enumeration", "[qp][property]") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + rep % 4, m = 3 + rep % 6;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    QpProblem p;
    p.Q = A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    p.q.resize(n);
    for (int i = 0; i < n; ++i) p.q[i] = 3 * g(rng);
    // z = 0 strictly feasible keeps every instance feasible.
    p.G.resize(m, n);
    p.h.resize(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) p.G(i, j) = g(rng);
      p.h[i] = -std::abs(g(rng)) - 0.1;
    }
    const auto r = solve_qp(p);
    const Eigen::VectorXd ref = oracle::qp_enumerate(p.Q, p.q, p.G, p.h);
    REQUIRE(ref.size() == n);
    REQUIRE(r.converged);
    REQUIRE((r.z - ref).norm() < 1e-6 * (1.0 + ref.norm()));
  }
}

TEST_CASE("SQP on a disk constraint", "[qp][sqp]") {
  // min x0 + x1  s.t.  1 - |x - (2,2)|^2 >= 0,  x >= 0   ->  x = 2 - 1/sqrt(2)
  NlpFunctions fn;
  fn.f = [](const Eigen::VectorXd& x) { return x.sum(); };
  fn.grad_f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Ones(x.size()); };
  fn.c = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, 1.0 - (x.array() - 2.0).square().sum());
  };
  const Eigen::VectorXd lb = Eigen::VectorXd::Zero(2), ub = Eigen::VectorXd::Constant(2, 10.0);
  for (const Eigen::Vector2d& start : {Eigen::Vector2d{2.0, 2.0}, Eigen::Vector2d{5.0, 0.5}, Eigen::Vector2d{0.0, 0.0}}) {
    int seen = 0;
    const auto r = sqp_minimize(fn, start, lb, ub, {}, [&](const Eigen::VectorXd&) { ++seen; });
    const double opt = 2.0 - 1.0 / std::sqrt(2.0);
    CHECK(std::abs(r.x[0] - opt) < 1e-5);
    CHECK(std::abs(r.x[1] - opt) < 1e-5);
    CHECK(seen >= 1);
    CHECK(r.iterations <= 100);
  }
}

TEST_CASE("SQP respects bounds", "[qp][sqp]") {
  // min -x0 - x1 with x <= 1.5: the bound is the only thing stopping it.
  NlpFunctions fn;
  fn.f = [](const Eigen::VectorXd& x) { return -x.sum(); };
  fn.grad_f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(x.size(), -1.0); };
  fn.c = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 10.0 - x.sum()); };
  const auto r = sqp_minimize(fn, Eigen::Vector2d{0.2, 0.3}, Eigen::VectorXd::Zero(2),
                              Eigen::VectorXd::Constant(2, 1.5), {});
  CHECK(std::abs(r.x[0] - 1.5) < 1e-6);
  CHECK(std::abs(r.x[1] - 1.5) < 1e-6);
}

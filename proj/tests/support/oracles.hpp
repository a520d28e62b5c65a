#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <complex>
#include <random>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;

/// Roots of det(H - l I) = l^2 - tr l + det for a 2x2 matrix, ordered by
/// Im descending then Re descending.
inline std::pair<cplx, cplx> quadratic_roots(const Eigen::MatrixXcd& h) {
  const cplx tr = h(0, 0) + h(1, 1);
  const cplx det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
  const cplx disc = std::sqrt(tr * tr - 4.0 * det);
  cplx l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
  const bool swap = l2.imag() > l1.imag() + 1e-14 ||
                    (std::abs(l2.imag() - l1.imag()) <= 1e-14 && l2.real() > l1.real());
  if (swap) std::swap(l1, l2);
  return {l1, l2};
}

/// exp(A) by scaling and squaring with a degree-24 Taylor polynomial.
inline Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXcd scaled = a / std::ldexp(1.0, squarings);
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
  Eigen::MatrixXcd sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

inline Eigen::MatrixXcd builtin(double x, double y) {
  Eigen::MatrixXcd h(2, 2);
  h << cplx(x, y), 1.0, 1.0, -cplx(x, y);
  return h;
}

/// Brute-force scan then bisection of P1(dt) = p0 on the two-level weights.
inline double dwell_bisection(double a1sq, double a2sq, double im1, double im2, double p0) {
  auto p1 = [&](double t) {
    const double w1 = a1sq * std::exp(2 * im1 * t), w2 = a2sq * std::exp(2 * im2 * t);
    return w1 / (w1 + w2);
  };
  if (p1(0) >= p0) return 0.0;
  double hi = 1e-3;
  while (p1(hi) < p0) hi *= 2;
  double lo = 0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (p1(mid) >= p0 ? hi : lo) = mid;
  }
  return hi;
}

// Strictly convex QP  min 1/2 z'Qz + q'z  s.t.  Gz >= h  by enumerating every
// active set (small m only): solve the equality KKT system for each subset and
// keep the best primal-dual feasible candidate.
inline Eigen::VectorXd qp_enumerate(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q, const Eigen::MatrixXd& G,
                                    const Eigen::VectorXd& h) {
  const int n = static_cast<int>(Q.rows()), m = static_cast<int>(G.rows());
  Eigen::VectorXd best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) act.push_back(i);
    const int k = static_cast<int>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = Q;
    rhs.head(n) = -q;
    for (int a = 0; a < k; ++a) {
      K.block(0, n + a, n, 1) = -G.row(act[a]).transpose();
      K.block(n + a, 0, 1, n) = G.row(act[a]);
      rhs[n + a] = h[act[a]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(n);
    if (((G * z - h).array() < -1e-9).any() || (sol.tail(k).array() < -1e-9).any()) continue;
    const double obj = 0.5 * z.dot(Q * z) + q.dot(z);
    if (obj < best_obj) {
      best_obj = obj;
      best = z;
    }
  }
  return best;
}

}  // namespace oracle

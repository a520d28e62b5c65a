#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace epsteer {

/// Dense convex QP:  minimize 1/2 z'Qz + q'z  subject to  G z >= h.
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

struct QpResult {
  Eigen::VectorXd z;
  Eigen::VectorXd lambda;  // one multiplier per row of G, >= 0
  bool converged = false;
  int iterations = 0;
};

/// Mehrotra predictor-corrector interior point on the normal equations.
/// Q must be positive definite on the feasible set; no feasible start needed.
inline QpResult solve_qp(const QpProblem& p, double tol = 1e-9, int max_iter = 100) {
  const auto n = p.Q.rows();
  const auto m = p.G.rows();
  QpResult r;
  r.z = Eigen::VectorXd::Zero(n);
  if (m == 0) {
    r.z = p.Q.ldlt().solve(-p.q);
    r.lambda.resize(0);
    r.converged = true;
    return r;
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd lam = Eigen::VectorXd::Ones(m);

  const double scale_d = 1.0 + p.q.lpNorm<Eigen::Infinity>();
  const double scale_p = 1.0 + p.h.lpNorm<Eigen::Infinity>();

  auto max_step = [](const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
  };

  // Newton system for the perturbed KKT conditions, reduced to the normal
  // equations (Q + G' diag(lam/w) G) dz = rhs.
  Eigen::VectorXd rd, rp, dz, dl, dw;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  auto factor = [&]() {
    rd = p.Q * r.z + p.q - p.G.transpose() * lam;
    rp = p.G * r.z - w - p.h;
    const Eigen::VectorXd d = lam.cwiseQuotient(w);
    Eigen::MatrixXd M = p.Q;
    M.noalias() += p.G.transpose() * d.asDiagonal() * p.G;
    M.diagonal().array() *= 1.0 + 1e-14;  // relative: keeps ill-scaled pivots meaningful
    ldlt.compute(M);
  };
  auto solve = [&](const Eigen::VectorXd& rc) {
    const Eigen::VectorXd t = (rc - lam.cwiseProduct(rp)).cwiseQuotient(w);
    dz = ldlt.solve(-rd + p.G.transpose() * t);
    dl = (lam.cwiseProduct(-rp - p.G * dz) + rc).cwiseQuotient(w);
    dw = (rc - w.cwiseProduct(dl)).cwiseQuotient(lam);
  };

  // Starting point: one affine step from (0, 1, 1), then push the slacks and
  // multipliers back into the interior.
  factor();
  solve(-w.cwiseProduct(lam));
  r.z += dz;
  w = (w + dw).cwiseAbs().cwiseMax(1.0);
  lam = (lam + dl).cwiseAbs().cwiseMax(1.0);

  for (int it = 0; it < max_iter; ++it) {
    r.iterations = it;
    factor();
    const double mu = w.dot(lam) / static_cast<double>(m);
    if (rd.lpNorm<Eigen::Infinity>() <= tol * scale_d && rp.lpNorm<Eigen::Infinity>() <= tol * scale_p &&
        mu <= 1e-3 * tol * scale_d) {
      r.converged = true;
      break;
    }

    solve(-w.cwiseProduct(lam));
    const double a_aff = std::min(max_step(w, dw), max_step(lam, dl));
    const double mu_aff = (w + a_aff * dw).dot(lam + a_aff * dl) / static_cast<double>(m);
    const double sigma = std::min(1.0, std::pow(mu_aff / mu, 3));

    solve(-w.cwiseProduct(lam) - dw.cwiseProduct(dl) + Eigen::VectorXd::Constant(m, sigma * mu));
    const double a = std::min(1.0, 0.99 * std::min(max_step(w, dw), max_step(lam, dl)));
    r.z += a * dz;
    w += a * dw;
    lam += a * dl;
  }
  r.lambda = lam;
  return r;
}

}  // namespace epsteer

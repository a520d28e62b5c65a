#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "qp.hpp"

namespace epsteer {

struct SqpOptions {
  double fd_step = 1e-6;
  double step_tolerance = 1e-8;
  int max_iterations = 100;
  double elastic_penalty = 1e4;  // price of linearized constraint violation inside each QP
};

/// Smooth problem  min f(x)  s.t.  c(x) >= 0,  lb <= x <= ub.
/// Constraint Jacobians come from forward differences; f supplies its own gradient.
struct NlpFunctions {
  std::function<double(const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> c;
};

struct SqpTrace {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;  // stopped on the step-norm test
};

/// Forward-difference Jacobian of c at x; stays inside [lb, ub] by stepping
/// backwards where the forward point would leave the box.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& c,
                                   const Eigen::VectorXd& x, const Eigen::VectorXd& c0,
                                   const Eigen::VectorXd& ub, double h) {
  Eigen::MatrixXd J(c0.size(), x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double hi = x[i] + h <= ub[i] ? h : -h;
    xp[i] = x[i] + hi;
    J.col(i) = (c(xp) - c0) / hi;
    xp[i] = x[i];
  }
  return J;
}

/// Line-search SQP with a damped-BFGS Lagrangian Hessian, an elastic QP
/// subproblem (always feasible) and an l1 merit function.
/// `on_iterate` sees every accepted point, the start included.
inline SqpTrace sqp_minimize(const NlpFunctions& fn, Eigen::VectorXd x, const Eigen::VectorXd& lb,
                             const Eigen::VectorXd& ub, const SqpOptions& opt,
                             const std::function<void(const Eigen::VectorXd&)>& on_iterate = {}) {
  const auto n = x.size();
  x = x.cwiseMax(lb).cwiseMin(ub);
  SqpTrace out;
  if (on_iterate) on_iterate(x);

  Eigen::VectorXd c = fn.c(x);
  const auto m = c.size();
  double f = fn.f(x);
  Eigen::VectorXd g = fn.grad_f(x);
  Eigen::MatrixXd J = fd_jacobian(fn.c, x, c, ub, opt.fd_step);
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
  double nu = 1.0;
  // Box on the step, widened after full steps and tightened after backtracking.
  double radius = std::max(0.1, x.lpNorm<Eigen::Infinity>());

  auto violation = [](const Eigen::VectorXd& cv) { return (-cv).cwiseMax(0.0).sum(); };

  // QP variables z = (p, s): s are elastic slacks on the linearized constraints.
  QpProblem qp;
  qp.Q = Eigen::MatrixXd::Zero(n + m, n + m);
  qp.q = Eigen::VectorXd::Zero(n + m);
  qp.G = Eigen::MatrixXd::Zero(2 * m + 2 * n, n + m);
  qp.h = Eigen::VectorXd::Zero(2 * m + 2 * n);
  qp.G.block(m, n, m, m).setIdentity();
  qp.G.block(2 * m, 0, n, n).setIdentity();
  qp.G.block(2 * m + n, 0, n, n) = -Eigen::MatrixXd::Identity(n, n);

  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    qp.Q.topLeftCorner(n, n) = B;
    qp.Q.bottomRightCorner(m, m) = 1e-8 * Eigen::MatrixXd::Identity(m, m);
    qp.q.head(n) = g;
    qp.q.tail(m).setConstant(opt.elastic_penalty);
    qp.G.block(0, 0, m, n) = J;
    qp.G.block(0, n, m, m).setIdentity();
    qp.h.head(m) = -c;
    qp.h.segment(2 * m, n) = (lb - x).cwiseMax(-radius);
    qp.h.segment(2 * m + n, n) = (x - ub).cwiseMax(-radius);
    const QpResult sub = solve_qp(qp);

    const Eigen::VectorXd p = sub.z.head(n);
    const Eigen::VectorXd s = sub.z.tail(m).cwiseMax(0.0);
    const Eigen::VectorXd lam = sub.lambda.head(m).cwiseMax(0.0);
    if (m > 0) nu = std::max(nu, 2.0 * lam.maxCoeff());

    const double viol = violation(c);
    // Keep the QP step a descent direction of the merit function.
    const double predicted = viol - s.sum();
    if (predicted > 1e-14) nu = std::max(nu, (g.dot(p) + 0.5 * p.dot(B * p)) / (0.5 * predicted));
    const double merit = f + nu * viol;
    const double slope = g.dot(p) - nu * predicted;

    double alpha = 1.0;
    Eigen::VectorXd x_new, c_new;
    double f_new = 0.0;
    bool accepted = false;
    while (alpha > 1e-10) {
      x_new = (x + alpha * p).cwiseMax(lb).cwiseMin(ub);
      c_new = fn.c(x_new);
      f_new = fn.f(x_new);
      const double merit_new = f_new + nu * violation(c_new);
      if (merit_new <= merit + 1e-4 * alpha * std::min(slope, 0.0)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd step = x_new - x;
    const double p_inf = p.lpNorm<Eigen::Infinity>();
    if (alpha == 1.0 && p_inf >= 0.5 * radius)
      radius *= 2.0;
    else if (alpha < 1.0)
      radius = std::max(2.0 * alpha * p_inf, 1e-3 * opt.step_tolerance);
    if (on_iterate) on_iterate(x_new);

    const Eigen::VectorXd g_new = fn.grad_f(x_new);
    const Eigen::MatrixXd J_new = fd_jacobian(fn.c, x_new, c_new, ub, opt.fd_step);
    Eigen::VectorXd y = (g_new - J_new.transpose() * lam) - (g - J.transpose() * lam);

    // Powell-damped BFGS keeps B positive definite.
    const Eigen::VectorXd Bs = B * step;
    const double sBs = step.dot(Bs);
    if (sBs > 1e-300) {
      double sy = step.dot(y);
      if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        y = theta * y + (1.0 - theta) * Bs;
        sy = step.dot(y);
      }
      B += y * y.transpose() / sy - Bs * Bs.transpose() / sBs;
    }

    x = x_new;
    c = c_new;
    f = f_new;
    g = g_new;
    J = J_new;
    if (step.norm() < opt.step_tolerance) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  return out;
}

}  // namespace epsteer

#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "types.hpp"

namespace epsteer {

/// A map from the 2-D parameter plane to N x N complex matrices.
///
/// The built-in family is the two-level matrix [[x+iy, 1], [1, -x-iy]], whose
/// exceptional points sit at (0, +1) and (0, -1). Custom families are affine
/// in the parameters, H(x, y) = H0 + x Hx + y Hy, or wrap an arbitrary
/// evaluator.
class HamiltonianFamily {
 public:
  using Evaluator = std::function<CMatrix(const ParameterPoint&)>;

  HamiltonianFamily(int dimension, Evaluator evaluator, std::string name = "custom",
                    std::optional<std::vector<ParameterPoint>> known_eps = std::nullopt)
      : dimension_(dimension),
        evaluator_(std::move(evaluator)),
        name_(std::move(name)),
        known_eps_(std::move(known_eps)) {
    if (dimension_ < 2) throw InputError("family dimension must be >= 2");
    if (!evaluator_) throw InputError("family evaluator is empty");
  }

  static HamiltonianFamily builtin() {
    return HamiltonianFamily(
        2,
        [](const ParameterPoint& p) {
          const cplx z(p.x, p.y);
          CMatrix h(2, 2);
          h << z, 1.0, 1.0, -z;
          return h;
        },
        "builtin", std::vector<ParameterPoint>{{0.0, 1.0}, {0.0, -1.0}});
  }

  static HamiltonianFamily affine(CMatrix h0, CMatrix hx, CMatrix hy) {
    const auto n = h0.rows();
    if (n < 2 || h0.cols() != n || hx.rows() != n || hx.cols() != n || hy.rows() != n ||
        hy.cols() != n) {
      throw InputError("affine family needs three square matrices of equal size >= 2");
    }
    return HamiltonianFamily(
        static_cast<int>(n),
        [h0 = std::move(h0), hx = std::move(hx), hy = std::move(hy)](const ParameterPoint& p) {
          return CMatrix(h0 + p.x * hx + p.y * hy);
        },
        "affine");
  }

  int dimension() const { return dimension_; }
  const std::string& name() const { return name_; }
  const std::optional<std::vector<ParameterPoint>>& known_eps() const { return known_eps_; }

  CMatrix operator()(const ParameterPoint& p) const { return evaluator_(p); }

 private:
  int dimension_;
  Evaluator evaluator_;
  std::string name_;
  std::optional<std::vector<ParameterPoint>> known_eps_;
};

inline CMatrix evaluate(const HamiltonianFamily& family, const ParameterPoint& p) {
  if (!p.finite()) throw InputError("non-finite parameter point " + to_string(p));
  CMatrix h = family(p);
  if (h.rows() != family.dimension() || h.cols() != family.dimension()) {
    throw InputError("family evaluator returned a matrix of the wrong size at " + to_string(p));
  }
  return h;
}

/// Sorted biorthonormal eigensystem at one parameter point.
///
/// Column n of `right` is |psi_n> (unit norm), row n of `left` is <theta_n|,
/// with left * right == identity. Eigenvalues are ordered by imaginary part,
/// largest first; ties are ordered by real part, largest first.
struct Eigensystem {
  CVector values;
  CMatrix right;
  CMatrix left;
  ParameterPoint point;
  double condition = 1.0;

  int size() const { return static_cast<int>(values.size()); }

  CMatrix reconstruct() const { return right * values.asDiagonal() * left; }

  double biorthonormality_error() const {
    const CMatrix g = left * right;
    return (g - CMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  }
};

using EigensystemPtr = std::shared_ptr<const Eigensystem>;

struct EigenOptions {
  double max_condition = 1e8;
};

namespace detail {

inline double tie_tolerance(const CVector& values) {
  return 64.0 * std::numeric_limits<double>::epsilon() *
         std::max(1.0, values.cwiseAbs().maxCoeff());
}

// Im descending, then Re descending within tie tolerance.
inline std::vector<int> sorted_order(const CVector& values) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  const double tol = tie_tolerance(values);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double dim = values[a].imag() - values[b].imag();
    if (std::abs(dim) > tol) return dim > 0;
    return values[a].real() > values[b].real();
  });
  return order;
}

inline double condition_2x2(const CMatrix& m) {
  const double fro2 = m.squaredNorm();
  const double det = std::abs(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
  if (det == 0.0) return kInf;
  const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
  const double smax2 = 0.5 * (fro2 + disc);
  const double smin2 = (det * det) / smax2;
  return std::sqrt(smax2 / smin2);
}

inline double condition_general(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s[s.size() - 1];
  if (smin == 0.0) return kInf;
  return s[0] / smin;
}

// Raw (unsorted) eigenpairs of a 2x2 matrix in closed form.
inline std::pair<CVector, CMatrix> eig_2x2(const CMatrix& h) {
  const cplx a = h(0, 0), b = h(0, 1), c = h(1, 0), d = h(1, 1);
  const cplx half_trace = 0.5 * (a + d);
  const cplx half_diff = 0.5 * (a - d);
  const cplx root = std::sqrt(half_diff * half_diff + b * c);
  CVector values(2);
  values << half_trace + root, half_trace - root;

  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  CMatrix vectors(2, 2);
  for (int k = 0; k < 2; ++k) {
    const cplx lam = values[k];
    Eigen::Vector2cd from_row0(b, lam - a);
    Eigen::Vector2cd from_row1(lam - d, c);
    Eigen::Vector2cd v = from_row0.norm() >= from_row1.norm() ? from_row0 : from_row1;
    if (v.norm() <= 1e-300 * scale) {
      // H - lam I vanishes: any basis works.
      v = Eigen::Vector2cd::Unit(k);
    }
    vectors.col(k) = v.normalized();
  }
  return {values, vectors};
}

inline void fix_standalone_gauge(CMatrix& right) {
  for (Eigen::Index n = 0; n < right.cols(); ++n) {
    Eigen::Index best = 0;
    double best_mod = -1.0;
    for (Eigen::Index k = 0; k < right.rows(); ++k) {
      const double m = std::abs(right(k, n));
      // first component of (numerically) largest modulus
      if (m > best_mod * (1.0 + 1e-12)) {
        best_mod = m;
        best = k;
      }
    }
    if (best_mod > 0.0) right.col(n) *= std::conj(right(best, n)) / best_mod;
  }
}

}  // namespace detail

/// Sorted, gauge-fixed biorthonormal eigensystem of `matrix`.
///
/// With `previous` supplied (same dimension), each right vector is rotated so
/// that its overlap with the same-index vector of `previous` is real and
/// non-negative.
inline Eigensystem eigensystem(const CMatrix& matrix, const Eigensystem* previous = nullptr,
                               std::optional<ParameterPoint> point = std::nullopt,
                               const EigenOptions& options = {}) {
  const auto n = matrix.rows();
  if (n < 2 || matrix.cols() != n) throw InputError("eigensystem needs a square matrix of size >= 2");
  if (!matrix.allFinite()) throw InputError("matrix has non-finite entries");

  CVector raw_values;
  CMatrix raw_vectors;
  if (n == 2) {
    std::tie(raw_values, raw_vectors) = detail::eig_2x2(matrix);
  } else {
    Eigen::ComplexEigenSolver<CMatrix> solver(matrix, true);
    if (solver.info() != Eigen::Success) throw DegeneracyError("eigen-solver did not converge");
    raw_values = solver.eigenvalues();
    raw_vectors = solver.eigenvectors();
    for (Eigen::Index k = 0; k < n; ++k) raw_vectors.col(k).normalize();
  }

  const auto order = detail::sorted_order(raw_values);
  Eigensystem es;
  es.point = point.value_or(ParameterPoint{kInf, kInf});
  es.values.resize(n);
  es.right.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    es.values[k] = raw_values[order[k]];
    es.right.col(k) = raw_vectors.col(order[k]);
  }

  es.condition = n == 2 ? detail::condition_2x2(es.right) : detail::condition_general(es.right);
  if (!(es.condition <= options.max_condition)) {
    throw DegeneracyError("matrix is defective or near-defective (eigenvector condition " +
                          std::to_string(es.condition) + ")" +
                          (point ? " at " + to_string(*point) : std::string()));
  }

  detail::fix_standalone_gauge(es.right);
  if (previous != nullptr && previous->size() == n) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const cplx overlap = previous->right.col(k).dot(es.right.col(k));
      const double mod = std::abs(overlap);
      if (mod > 1e-300) es.right.col(k) *= std::conj(overlap) / mod;
    }
  }

  if (n == 2) {
    const CMatrix& r = es.right;
    const cplx det = r(0, 0) * r(1, 1) - r(0, 1) * r(1, 0);
    es.left.resize(2, 2);
    es.left << r(1, 1), -r(0, 1), -r(1, 0), r(0, 0);
    es.left /= det;
  } else {
    es.left = es.right.partialPivLu().inverse();
  }
  return es;
}

inline Eigensystem eigensystem_at(const HamiltonianFamily& family, const ParameterPoint& p,
                                  const Eigensystem* previous = nullptr,
                                  const EigenOptions& options = {}) {
  return eigensystem(evaluate(family, p), previous, p, options);
}

/// Discriminant of the characteristic polynomial: prod_{i<j} (w_i - w_j)^2.
inline cplx discriminant(const CMatrix& h) {
  if (h.rows() == 2) {
    const cplx diff = h(0, 0) - h(1, 1);
    return diff * diff + 4.0 * h(0, 1) * h(1, 0);
  }
  Eigen::ComplexEigenSolver<CMatrix> solver(h, false);
  const CVector& w = solver.eigenvalues();
  cplx d(1.0, 0.0);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    for (Eigen::Index j = i + 1; j < w.size(); ++j) d *= (w[i] - w[j]) * (w[i] - w[j]);
  return d;
}

struct Region {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;

  bool contains(const ParameterPoint& p, double slack = 0.0) const {
    return p.x >= x_min - slack && p.x <= x_max + slack && p.y >= y_min - slack &&
           p.y <= y_max + slack;
  }
};

struct LocateOptions {
  int grid = 41;
  double tolerance = 1e-9;
  int max_newton = 60;
};

/// All exceptional points of `family` inside `region`, found by seeding a grid
/// with local minima of |discriminant| and refining with damped Newton.
inline std::vector<ParameterPoint> locate_eps(const HamiltonianFamily& family, const Region& region,
                                              const LocateOptions& options = {}) {
  if (!(region.x_max > region.x_min) || !(region.y_max > region.y_min) ||
      !std::isfinite(region.x_min) || !std::isfinite(region.x_max) ||
      !std::isfinite(region.y_min) || !std::isfinite(region.y_max)) {
    throw InputError("locate_eps needs a finite, non-empty region");
  }
  const int g = std::max(options.grid, 3);
  const double hx = (region.x_max - region.x_min) / (g - 1);
  const double hy = (region.y_max - region.y_min) / (g - 1);
  auto node = [&](int i, int j) {
    return ParameterPoint{region.x_min + i * hx, region.y_min + j * hy};
  };
  auto disc_at = [&](const ParameterPoint& p) { return discriminant(evaluate(family, p)); };

  std::vector<double> mag(static_cast<size_t>(g) * g);
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) mag[j * g + i] = std::abs(disc_at(node(i, j)));

  const double span = std::max(region.x_max - region.x_min, region.y_max - region.y_min);
  const double fd = 1e-7 * std::max(1.0, span);
  std::vector<ParameterPoint> found;

  for (int j = 0; j < g; ++j) {
    for (int i = 0; i < g; ++i) {
      bool local_min = true;
      for (int dj = -1; dj <= 1 && local_min; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if ((di == 0 && dj == 0) || i + di < 0 || i + di >= g || j + dj < 0 || j + dj >= g)
            continue;
          if (mag[(j + dj) * g + i + di] < mag[j * g + i]) {
            local_min = false;
            break;
          }
        }
      if (!local_min) continue;

      ParameterPoint p = node(i, j);
      cplx f = disc_at(p);
      bool converged = std::abs(f) == 0.0;
      for (int it = 0; it < options.max_newton && !converged; ++it) {
        const cplx dfx = (disc_at({p.x + fd, p.y}) - disc_at({p.x - fd, p.y})) / (2 * fd);
        const cplx dfy = (disc_at({p.x, p.y + fd}) - disc_at({p.x, p.y - fd})) / (2 * fd);
        Eigen::Matrix2d jac;
        jac << dfx.real(), dfy.real(), dfx.imag(), dfy.imag();
        const double det = jac.determinant();
        if (std::abs(det) < 1e-300) break;
        const Eigen::Vector2d delta = jac.inverse() * Eigen::Vector2d(f.real(), f.imag());
        double damping = 1.0;
        ParameterPoint trial;
        cplx ft;
        for (int h = 0; h < 30; ++h) {
          trial = {p.x - damping * delta[0], p.y - damping * delta[1]};
          ft = disc_at(trial);
          if (std::abs(ft) < std::abs(f)) break;
          damping *= 0.5;
        }
        const double moved = damping * delta.norm();
        if (!(std::abs(ft) < std::abs(f))) {
          converged = moved < options.tolerance * 1e-3;
          break;
        }
        p = trial;
        f = ft;
        if (moved < 1e-14 * std::max(1.0, std::hypot(p.x, p.y)) || std::abs(f) == 0.0) converged = true;
      }

      const double scale = std::max(1.0, evaluate(family, p).cwiseAbs().maxCoeff());
      if (!p.finite() || std::abs(f) > 1e-10 * scale * scale) continue;
      if (!region.contains(p, options.tolerance)) continue;
      const bool dup = std::any_of(found.begin(), found.end(), [&](const ParameterPoint& q) {
        return distance(p, q) < 1e-7 * std::max(1.0, span);
      });
      if (!dup) found.push_back(p);
    }
  }
  std::sort(found.begin(), found.end(), [](const ParameterPoint& a, const ParameterPoint& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  return found;
}

/// Exceptional points relevant to a set of points: the family's known list,
/// or a search over the padded bounding box.
inline std::vector<ParameterPoint> relevant_eps(const HamiltonianFamily& family,
                                                const std::vector<ParameterPoint>& points) {
  if (family.known_eps()) return *family.known_eps();
  if (points.empty()) return {};
  Region box{kInf, -kInf, kInf, -kInf};
  for (const auto& p : points) {
    box.x_min = std::min(box.x_min, p.x);
    box.x_max = std::max(box.x_max, p.x);
    box.y_min = std::min(box.y_min, p.y);
    box.y_max = std::max(box.y_max, p.y);
  }
  const double pad = 0.25 * std::max({box.x_max - box.x_min, box.y_max - box.y_min, 1.0});
  box.x_min -= pad;
  box.x_max += pad;
  box.y_min -= pad;
  box.y_max += pad;
  return locate_eps(family, box);
}

inline void require_ep_clearance(const std::vector<ParameterPoint>& points,
                                 const std::vector<ParameterPoint>& eps, double radius) {
  for (const auto& p : points)
    for (const auto& e : eps)
      if (distance(p, e) < radius) {
        throw DegeneracyError("point " + to_string(p) + " lies within " + std::to_string(radius) +
                              " of exceptional point " + to_string(e));
      }
}

struct SheetGrid {
  std::vector<double> xs;
  std::vector<double> ys;

  static SheetGrid uniform(double x0, double x1, int nx, double y0, double y1, int ny) {
    SheetGrid g;
    for (int i = 0; i < nx; ++i) g.xs.push_back(nx == 1 ? x0 : x0 + (x1 - x0) * i / (nx - 1));
    for (int j = 0; j < ny; ++j) g.ys.push_back(ny == 1 ? y0 : y0 + (y1 - y0) * j / (ny - 1));
    return g;
  }
};

struct SheetNode {
  ParameterPoint point;
  CVector values;
};

/// Im-sorted eigenvalues at every grid node (y-major, x varying fastest).
inline std::vector<SheetNode> sheet_sample(const HamiltonianFamily& family, const SheetGrid& grid,
                                           double ep_radius = kDefaultEpRadius) {
  std::vector<ParameterPoint> nodes;
  nodes.reserve(grid.xs.size() * grid.ys.size());
  for (double y : grid.ys)
    for (double x : grid.xs) nodes.push_back({x, y});
  require_ep_clearance(nodes, relevant_eps(family, nodes), ep_radius);

  std::vector<SheetNode> out;
  out.reserve(nodes.size());
  for (const auto& p : nodes) out.push_back({p, eigensystem_at(family, p).values});
  return out;
}

}  // namespace epsteer

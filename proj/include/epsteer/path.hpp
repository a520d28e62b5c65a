#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "types.hpp"

namespace epsteer {

enum class LoopKind { Circle, Ellipse, Polyline };

struct LoopSpec {
  LoopKind kind = LoopKind::Circle;
  ParameterPoint center{0.0, 1.0};
  double radius_a = 1.0;
  double radius_b = 1.0;
  double start_angle = -std::numbers::pi / 2;
  int n_intervals = 100;
  // Closed vertex list (first == last) for LoopKind::Polyline.
  std::vector<ParameterPoint> polyline;

  /// Circle of radius 1 about the EP (0,1), starting at (0,0), 100 intervals.
  static LoopSpec default_loop() { return {}; }
};

/// Closed, discretized loop with normalized arc coordinates.
///
/// arc[j] = C_j runs from 0 to 1; rho is the squared chord length of the
/// whole polyline, so each step has dC = |dx| / sqrt(rho).
struct ParameterLoop {
  std::vector<ParameterPoint> points;
  std::vector<double> arc;
  double rho = 0.0;
  Direction direction = Direction::CCW;

  int n_intervals() const { return static_cast<int>(points.size()) - 1; }
  double arc_step(int j) const { return arc[j + 1] - arc[j]; }
};

namespace detail {

inline void fill_arc(ParameterLoop& loop) {
  const auto n = loop.points.size();
  std::vector<double> chords(n - 1);
  double total = 0.0;
  for (size_t j = 0; j + 1 < n; ++j) {
    chords[j] = distance(loop.points[j], loop.points[j + 1]);
    total += chords[j];
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw InputError("degenerate (zero-length) loop");
  loop.rho = total * total;
  loop.arc.assign(n, 0.0);
  for (size_t j = 1; j < n; ++j) loop.arc[j] = loop.arc[j - 1] + chords[j - 1] / total;
  loop.arc.back() = 1.0;
}

// Resample a closed polyline at n equal arc-length steps.
inline std::vector<ParameterPoint> resample(const std::vector<ParameterPoint>& v, int n) {
  std::vector<double> cum(v.size(), 0.0);
  for (size_t k = 1; k < v.size(); ++k) cum[k] = cum[k - 1] + distance(v[k - 1], v[k]);
  const double total = cum.back();
  std::vector<ParameterPoint> out;
  out.reserve(n + 1);
  size_t seg = 0;
  for (int j = 0; j < n; ++j) {
    const double s = total * j / n;
    while (seg + 2 < v.size() && cum[seg + 1] <= s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? (s - cum[seg]) / len : 0.0;
    out.push_back({v[seg].x + t * (v[seg + 1].x - v[seg].x), v[seg].y + t * (v[seg + 1].y - v[seg].y)});
  }
  out.push_back(out.front());
  return out;
}

}  // namespace detail

inline ParameterLoop build_loop(const LoopSpec& spec) {
  if (spec.n_intervals < 2) throw InputError("loop needs n_intervals >= 2");
  ParameterLoop loop;
  const int n = spec.n_intervals;

  if (spec.kind == LoopKind::Polyline) {
    const auto& v = spec.polyline;
    if (v.size() < 2 || !(v.front() == v.back())) throw InputError("polyline loop is not closed");
    std::vector<ParameterPoint> distinct;
    for (const auto& p : v) {
      if (!p.finite()) throw InputError("polyline has a non-finite vertex");
      bool seen = false;
      for (const auto& q : distinct) seen = seen || q == p;
      if (!seen) distinct.push_back(p);
    }
    if (distinct.size() < 3) throw InputError("polyline loop needs at least 3 distinct points");
    double total = 0.0;
    for (size_t k = 1; k < v.size(); ++k) total += distance(v[k - 1], v[k]);
    if (!(total > 0.0)) throw InputError("degenerate (zero-length) loop");
    loop.points = detail::resample(v, n);
  } else {
    const double a = spec.radius_a;
    const double b = spec.kind == LoopKind::Circle ? spec.radius_a : spec.radius_b;
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw InputError("loop radii must be positive and finite");
    if (!spec.center.finite() || !std::isfinite(spec.start_angle))
      throw InputError("loop center and start angle must be finite");
    loop.points.reserve(n + 1);
    for (int j = 0; j < n; ++j) {
      const double th = spec.start_angle + 2.0 * std::numbers::pi * j / n;
      loop.points.push_back({spec.center.x + a * std::cos(th), spec.center.y + b * std::sin(th)});
    }
    loop.points.push_back(loop.points.front());
  }
  detail::fill_arc(loop);
  return loop;
}

/// CCW keeps the stored traversal; CW reverses it (so CW is an involution).
/// Both traversals start and end at the same point.
inline ParameterLoop orient(const ParameterLoop& loop, Direction direction) {
  if (direction == Direction::CCW) return loop;
  ParameterLoop out;
  out.rho = loop.rho;
  out.direction = reversed(loop.direction);
  out.points.assign(loop.points.rbegin(), loop.points.rend());
  const auto n = loop.arc.size();
  out.arc.resize(n);
  for (size_t j = 0; j < n; ++j) out.arc[j] = 1.0 - loop.arc[n - 1 - j];
  out.arc.front() = 0.0;
  out.arc.back() = 1.0;
  return out;
}

inline double min_ep_distance(const ParameterLoop& loop, std::span<const ParameterPoint> eps) {
  double best = kInf;
  for (const auto& p : loop.points)
    for (const auto& e : eps) best = std::min(best, distance(p, e));
  return best;
}

/// Signed number of turns of the closed point sequence about `ep`.
inline int winding_number(std::span<const ParameterPoint> points, const ParameterPoint& ep,
                          double ep_radius = kDefaultEpRadius) {
  double total = 0.0;
  for (size_t j = 0; j < points.size(); ++j) {
    if (distance(points[j], ep) < ep_radius)
      throw InputError("loop passes within " + std::to_string(ep_radius) + " of " + to_string(ep));
    if (j == 0) continue;
    const double a0 = std::atan2(points[j - 1].y - ep.y, points[j - 1].x - ep.x);
    const double a1 = std::atan2(points[j].y - ep.y, points[j].x - ep.x);
    total += std::remainder(a1 - a0, 2.0 * std::numbers::pi);
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

inline int winding_number(const ParameterLoop& loop, const ParameterPoint& ep,
                          double ep_radius = kDefaultEpRadius) {
  return winding_number(std::span<const ParameterPoint>(loop.points), ep, ep_radius);
}

}  // namespace epsteer

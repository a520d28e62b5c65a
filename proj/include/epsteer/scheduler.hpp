#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "evolution.hpp"
#include "schedule.hpp"

namespace epsteer {

struct SchedulerConfig {
  double p0 = 0.9;
  double dwell_cap = 50.0;
  double tolerance = 1e-9;

  void validate() const {
    if (!(p0 > 0.0 && p0 < 1.0)) throw InputError("p0 must lie in (0, 1); P0 must be less than 1");
    if (!(dwell_cap > 0.0) || !std::isfinite(dwell_cap)) throw InputError("dwell_cap must be positive");
    if (!(tolerance > 0.0)) throw InputError("scheduler tolerance must be positive");
  }
};

enum class SchedulerFailure { DegenerateGap, UnreachableMode };

struct SchedulerError : Error {
  SchedulerError(SchedulerFailure reason, int point_index, const std::string& what)
      : Error(what), reason(reason), point_index(point_index) {}
  SchedulerFailure reason;
  int point_index;
};

struct Dwell {
  double dt = 0.0;
  bool capped = false;
};

/// Dominant-state proportion after dwelling `dt` at a point whose
/// expansion coefficients (before the dwell) are `a`.
inline double dominant_proportion(const CVector& a, const CVector& values, double dt) {
  // log-sum-exp over |a_n|^2 exp(2 Im w_n dt)
  std::vector<double> logw(a.size());
  double top = -kInf;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double m = std::norm(a[k]);
    logw[k] = m > 0.0 ? std::log(m) + 2.0 * values[k].imag() * dt : -kInf;
    top = std::max(top, logw[k]);
  }
  if (top == -kInf) throw InvalidStateError("all coefficients vanish");
  double sum = 0.0;
  for (double l : logw) sum += std::exp(l - top);
  return std::exp(logw[0] - top) / sum;
}

/// Smallest dt in [0, cap] with dominant_proportion(dt) >= p0, by bisection.
/// Assumes the proportion is non-decreasing in dt (w_1 has the unique largest Im).
inline Dwell dwell_by_bisection(const CVector& a, const CVector& values, double p0, double cap,
                                int max_iter = 200) {
  if (dominant_proportion(a, values, 0.0) >= p0) return {0.0, false};
  if (dominant_proportion(a, values, cap) < p0) return {cap, true};
  double lo = 0.0, hi = cap;
  for (int it = 0; it < max_iter && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (dominant_proportion(a, values, mid) >= p0 ? hi : lo) = mid;
  }
  return {hi, false};
}

inline double im_gap(const CVector& values) {
  double rest = -kInf;
  for (Eigen::Index k = 1; k < values.size(); ++k) rest = std::max(rest, values[k].imag());
  return values[0].imag() - rest;
}

/// Dwell at the next point that brings the dominant proportion to p0.
///
/// Zero when the proportion already meets p0 on arrival (the point is
/// skipped). Two-level systems use the closed form, larger ones bisect.
inline Dwell dwell_for_target(const EvolutionState& state, const Eigensystem& next, double p0,
                              const SchedulerConfig& config = {}, int point_index = -1) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw InputError("p0 must lie in (0, 1)");
  const CVector a = next.left * state.psi;
  if (dominant_proportion(a, next.values, 0.0) >= p0) return {0.0, false};

  const std::string where = point_index >= 0 ? " at point " + std::to_string(point_index) : std::string();
  if (std::norm(a[0]) == 0.0)
    throw SchedulerError(SchedulerFailure::UnreachableMode, point_index,
                         "dominant mode has zero overlap" + where);
  const double gap = im_gap(next.values);
  if (!(gap > detail::tie_tolerance(next.values)))
    throw SchedulerError(SchedulerFailure::DegenerateGap, point_index,
                         "dominant eigenvalue is not strictly the most amplified" + where);

  if (next.size() == 2) {
    const double ratio = std::norm(a[0]) / std::norm(a[1]);
    const double dt = (std::log(p0 / (1.0 - p0)) - std::log(ratio)) / (2.0 * gap);
    if (dt > config.dwell_cap) return {config.dwell_cap, true};
    return {std::max(dt, 0.0), false};
  }
  return dwell_by_bisection(a, next.values, p0, config.dwell_cap);
}

struct StableResult {
  Schedule schedule;
  EvolutionTrace trace;
  std::vector<int> capped;      // point indices where the dwell hit the cap
  std::vector<int> degenerate;  // point indices with a degenerate Im gap (dwell forced to 0)
  int engaged_from = -1;        // first point index with a positive dwell
};

/// Walks the loop once, dwelling at each point just long enough to restore
/// the dominant proportion to p0 and skipping points that are already above.
inline StableResult stable_schedule(const PathEigensystems& eig, Mode mode, const SchedulerConfig& config = {}) {
  config.validate();
  const int n = eig.n_intervals();
  StableResult out;
  std::vector<double> dwells(n, 0.0);
  EvolutionState s = init_state(eig.systems[0], mode);
  for (int j = 0; j < n; ++j) {
    Dwell d;
    try {
      d = dwell_for_target(s, eig.at(j + 1), config.p0, config, j + 1);
    } catch (const SchedulerError& e) {
      if (e.reason != SchedulerFailure::DegenerateGap) throw;
      // Equal growth rates: no dwell changes the proportions here.
      out.degenerate.push_back(j + 1);
    }
    if (d.capped) out.capped.push_back(j + 1);
    if (d.dt > 0.0 && out.engaged_from < 0) out.engaged_from = j + 1;
    dwells[j] = d.dt;
    s = step(s, eig.systems[j + 1], d.dt);
  }
  out.schedule = Schedule(std::move(dwells), ScheduleMethod::Stable);
  out.trace = run_trace(eig, out.schedule, mode);
  return out;
}

inline StableResult stable_schedule(const ParameterLoop& path, const HamiltonianFamily& family, Mode mode,
                                    const SchedulerConfig& config = {}) {
  return stable_schedule(compute_eigensystems(family, path), mode, config);
}

/// Engaged, non-degenerate points whose dominant proportion breaks the pin:
/// a dwelling point must sit at p0 within `tol`, a skipped point at or above.
inline std::vector<int> pinning_violations(const StableResult& r, double p0, double tol) {
  std::vector<int> bad;
  if (r.engaged_from < 0) return bad;
  for (const auto& s : r.trace.samples) {
    if (s.j < r.engaged_from) continue;
    if (std::find(r.degenerate.begin(), r.degenerate.end(), s.j) != r.degenerate.end()) continue;
    const double p1 = s.proportions[0];
    const bool ok = s.dt > 0.0 ? std::abs(p1 - p0) <= tol : p1 >= p0 - tol;
    if (!ok) bad.push_back(s.j);
  }
  return bad;
}

}  // namespace epsteer

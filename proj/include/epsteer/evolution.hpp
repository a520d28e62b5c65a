#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "hamiltonian.hpp"
#include "path.hpp"
#include "schedule.hpp"
#include "types.hpp"

namespace epsteer {

/// Physical state Psi_j together with its coefficients in the instantaneous
/// eigenbasis of point j. Psi is kept at unit norm; the log of the dropped
/// scale accumulates in `log_scale`.
struct EvolutionState {
  CVector psi;
  CVector coeffs;
  int step_index = 0;
  EigensystemPtr eigensystem;
  double log_scale = 0.0;
};

struct ModeBasis {
  CRowVector theta_A, theta_B;
  CVector psi_A, psi_B;

  static ModeBasis from(const Eigensystem& start) {
    return {start.left.row(0), start.left.row(1), start.right.col(0), start.right.col(1)};
  }
};

struct TraceSample {
  int j = 0;
  ParameterPoint point;
  double dt = 0.0;  // dwell spent at this point (zero for j = 0)
  double t_cum = 0.0;
  std::vector<double> proportions;
  cplx omega_bar;
  double zeta_A = 0.0;
  double zeta_B = 0.0;
  double speed = 0.0;
  double log_scale = 0.0;
};

struct EvolutionTrace {
  std::vector<TraceSample> samples;
  Direction direction = Direction::CCW;
  Mode mode = Mode::A;
  std::vector<double> dwells;

  const TraceSample& end() const { return samples.back(); }
  double end_zeta(Mode m) const { return m == Mode::A ? end().zeta_A : end().zeta_B; }
  double total_time() const { return samples.empty() ? 0.0 : samples.back().t_cum; }
};

inline EvolutionState init_state(EigensystemPtr start, Mode mode) {
  if (!start || start->size() < 2) throw InputError("init_state needs a start eigensystem of size >= 2");
  const int k = index_of(mode);
  EvolutionState s;
  s.psi = start->right.col(k);
  s.coeffs = CVector::Zero(start->size());
  s.coeffs[k] = 1.0;
  s.eigensystem = std::move(start);
  return s;
}

namespace detail {

// One application of the spectral propagator. Returns the new coefficients
// and rescales psi/coeffs to unit |psi|; the removed log-scale is added to
// `log_scale`.
inline void propagate(CVector& psi, CVector& coeffs, double& log_scale, const Eigensystem& next,
                      double dt) {
  if (!std::isfinite(dt) || dt < 0.0) throw StepError("dwell must be finite and >= 0, got " + std::to_string(dt));
  CVector a = next.left * psi;
  if (dt == 0.0) {
    // Pure re-expansion: the physical vector is left untouched.
    coeffs = std::move(a);
    return;
  }
  const auto n = next.size();
  double shift = -kInf;
  for (Eigen::Index k = 0; k < n; ++k) shift = std::max(shift, next.values[k].imag() * dt);
  if (!std::isfinite(shift))
    throw StepError("growth exponent overflow at " + to_string(next.point) +
                    "; the dwell is too long to represent even after renormalization");
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx w = next.values[k];
    a[k] *= std::exp(cplx(w.imag() * dt - shift, -w.real() * dt));
  }
  psi.noalias() = next.right * a;
  const double norm = psi.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw InvalidStateError("state vanished or overflowed at " + to_string(next.point));
  psi /= norm;
  a /= norm;
  coeffs = std::move(a);
  log_scale += shift + std::log(norm);
}

}  // namespace detail

/// Spectral step: c_{n,j+1} = <theta_{n,j+1}|Psi_j> exp(-i w_{n,j+1} dt).
inline EvolutionState step(const EvolutionState& state, EigensystemPtr next, double dt) {
  if (!next || next->size() != state.psi.size()) throw InputError("step: eigensystem size mismatch");
  EvolutionState out;
  out.psi = state.psi;
  out.log_scale = state.log_scale;
  detail::propagate(out.psi, out.coeffs, out.log_scale, *next, dt);
  out.step_index = state.step_index + 1;
  out.eigensystem = std::move(next);
  return out;
}

inline std::vector<double> proportions(const CVector& coeffs) {
  const double total = coeffs.squaredNorm();
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidStateError("all coefficients vanish");
  std::vector<double> p(coeffs.size());
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) p[k] = std::norm(coeffs[k]) / total;
  return p;
}

inline std::vector<double> proportions(const EvolutionState& state) { return proportions(state.coeffs); }

inline cplx weighted_eigenvalue(const std::vector<double>& p, const CVector& values) {
  cplx w(0.0, 0.0);
  for (size_t k = 0; k < p.size(); ++k) w += p[k] * values[static_cast<Eigen::Index>(k)];
  return w;
}

inline cplx weighted_eigenvalue(const EvolutionState& state) {
  return weighted_eigenvalue(proportions(state), state.eigensystem->values);
}

inline std::pair<double, double> mode_projection(const CVector& psi, const ModeBasis& basis) {
  const double ra = std::norm((basis.theta_A * psi).value());
  const double rb = std::norm((basis.theta_B * psi).value());
  const double total = ra + rb;
  if (!(total > 0.0)) throw InvalidStateError("state has no weight on modes A and B");
  return {ra / total, rb / total};
}

inline std::pair<double, double> mode_projection(const EvolutionState& state, const ModeBasis& basis) {
  return mode_projection(state.psi, basis);
}

/// Eigensystems of every point of an oriented loop, gauge-continued along the
/// traversal. Immutable once built; share it across threads freely.
struct PathEigensystems {
  ParameterLoop path;
  std::vector<EigensystemPtr> systems;

  int n_intervals() const { return path.n_intervals(); }
  const Eigensystem& at(int j) const { return *systems[j]; }
  ModeBasis basis() const { return ModeBasis::from(*systems.front()); }
};

inline PathEigensystems compute_eigensystems(const HamiltonianFamily& family, ParameterLoop path,
                                             double ep_radius = kDefaultEpRadius,
                                             const EigenOptions& options = {}) {
  require_ep_clearance(path.points, relevant_eps(family, path.points), ep_radius);
  PathEigensystems out;
  out.systems.reserve(path.points.size());
  const Eigensystem* prev = nullptr;
  for (const auto& p : path.points) {
    out.systems.push_back(std::make_shared<const Eigensystem>(eigensystem_at(family, p, prev, options)));
    prev = out.systems.back().get();
  }
  out.path = std::move(path);
  return out;
}

/// Final physical state only; same arithmetic as run_trace.
inline CVector end_state(const PathEigensystems& eig, std::span<const double> dwells, Mode mode) {
  const int n = eig.n_intervals();
  if (static_cast<int>(dwells.size()) != n)
    throw InputError("schedule length " + std::to_string(dwells.size()) + " != loop intervals " +
                     std::to_string(n));
  CVector psi = eig.at(0).right.col(index_of(mode));
  CVector coeffs;
  double log_scale = 0.0;
  for (int j = 0; j < n; ++j) detail::propagate(psi, coeffs, log_scale, eig.at(j + 1), dwells[j]);
  return psi;
}

inline std::pair<double, double> end_projection(const PathEigensystems& eig, std::span<const double> dwells,
                                                Mode mode) {
  return mode_projection(end_state(eig, dwells, mode), eig.basis());
}

inline TraceSample make_sample(const PathEigensystems& eig, const EvolutionState& s, const ModeBasis& basis,
                               double dt, double t_cum) {
  TraceSample t;
  t.j = s.step_index;
  t.point = eig.path.points[t.j];
  t.dt = dt;
  t.t_cum = t_cum;
  t.proportions = proportions(s);
  t.omega_bar = weighted_eigenvalue(t.proportions, s.eigensystem->values);
  std::tie(t.zeta_A, t.zeta_B) = mode_projection(s, basis);
  if (t.j == 0) {
    t.speed = 0.0;
  } else {
    const double dc = eig.path.arc[t.j] - eig.path.arc[t.j - 1];
    t.speed = dt > 0.0 ? dc / dt : kInf;
  }
  t.log_scale = s.log_scale;
  return t;
}

inline EvolutionTrace run_trace(const PathEigensystems& eig, std::span<const double> dwells, Mode mode) {
  const int n = eig.n_intervals();
  if (static_cast<int>(dwells.size()) != n)
    throw InputError("schedule length " + std::to_string(dwells.size()) + " != loop intervals " +
                     std::to_string(n));
  const ModeBasis basis = eig.basis();
  EvolutionTrace trace;
  trace.direction = eig.path.direction;
  trace.mode = mode;
  trace.dwells.assign(dwells.begin(), dwells.end());
  trace.samples.reserve(n + 1);

  EvolutionState s = init_state(eig.systems[0], mode);
  double t_cum = 0.0;
  trace.samples.push_back(make_sample(eig, s, basis, 0.0, t_cum));
  for (int j = 0; j < n; ++j) {
    s = step(s, eig.systems[j + 1], dwells[j]);
    t_cum += dwells[j];
    trace.samples.push_back(make_sample(eig, s, basis, dwells[j], t_cum));
  }
  return trace;
}

inline EvolutionTrace run_trace(const PathEigensystems& eig, const Schedule& schedule, Mode mode) {
  return run_trace(eig, std::span<const double>(schedule.dwells()), mode);
}

inline EvolutionTrace run_trace(const ParameterLoop& path, const HamiltonianFamily& family,
                                const Schedule& schedule, Mode mode) {
  return run_trace(compute_eigensystems(family, path), schedule, mode);
}

}  // namespace epsteer

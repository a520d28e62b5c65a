#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "optimizer.hpp"

namespace epsteer {

inline double chiral_index(double za_ccw, double zb_ccw, double za_cw, double zb_cw) {
  return 0.5 * std::max(za_ccw, zb_ccw) + 0.5 * std::max(za_cw, zb_cw);
}

/// Average over both directions of the larger end purity.
inline double chiral_index(const EvolutionTrace& ccw, const EvolutionTrace& cw) {
  auto complete = [](const EvolutionTrace& t) { return !t.samples.empty() && t.samples.size() == t.dwells.size() + 1; };
  if (!complete(ccw) || !complete(cw)) throw InputError("chiral_index: incomplete trace");
  if (ccw.direction != Direction::CCW || cw.direction != Direction::CW)
    throw InputError("chiral_index: expects one CCW and one CW trace");
  if (ccw.mode != cw.mode) throw InputError("chiral_index: traces start from different input modes");
  if (ccw.samples.size() != cw.samples.size() || !(ccw.samples.front().point == cw.samples.front().point))
    throw InputError("chiral_index: traces are not on the same loop");
  return chiral_index(ccw.end().zeta_A, ccw.end().zeta_B, cw.end().zeta_A, cw.end().zeta_B);
}

// ---------------------------------------------------------------------------
// Time to purity
// ---------------------------------------------------------------------------

/// Maps a purity level to the shortest total time found that reaches it
/// (+inf when the level is out of reach).
using MethodRunner = std::function<double(double purity)>;

struct SearchOptions {
  double t_min = 1e-2;  // uniform total-time scan, log-spaced
  double t_max = 1e3;
  int t_grid = 240;
  double p0_min = 0.5;  // stable P0 scan, linear
  double p0_max = 0.995;
  int p0_grid = 100;
  int bisections = 60;
};

namespace detail {

// First grid point where `ok` holds, then bisection on the bracket below it.
inline std::optional<double> first_crossing(const std::vector<double>& grid, const std::function<bool(double)>& ok,
                                            int bisections) {
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!ok(grid[i])) continue;
    if (i == 0) return grid[0];
    double lo = grid[i - 1], hi = grid[i];
    for (int k = 0; k < bisections; ++k) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? hi : lo) = mid;
    }
    return hi;
  }
  return std::nullopt;
}

inline bool feasible(const std::vector<double>& dwells, const OptimizationProblem& problem) {
  try {
    return meets_targets(scenario_purities(dwells, problem), problem);
  } catch (const Error&) {
    return false;
  }
}

}  // namespace detail

/// Shortest uniform total time meeting every scenario of `problem`.
inline double uniform_time_for(const OptimizationProblem& problem, const SearchOptions& opt = {}) {
  const int n = problem.dimension();
  std::vector<double> grid(opt.t_grid);
  for (int i = 0; i < opt.t_grid; ++i)
    grid[i] = opt.t_min * std::pow(opt.t_max / opt.t_min, static_cast<double>(i) / (opt.t_grid - 1));
  const auto t = detail::first_crossing(
      grid, [&](double total) { return detail::feasible(std::vector<double>(n, total / n), problem); },
      opt.bisections);
  return t ? *t : kInf;
}

struct StableSearch {
  double time = kInf;
  double p0 = 0.0;
};

/// Stable schedule built on (direction, mode) with the smallest P0 whose
/// shared schedule meets every scenario; time is that schedule's total.
inline StableSearch stable_time_for(const OptimizationProblem& problem, Direction direction, Mode mode,
                                    const SearchOptions& opt = {}) {
  auto schedule_at = [&](double p0) -> std::optional<std::vector<double>> {
    SchedulerConfig cfg;
    cfg.p0 = p0;
    try {
      return dwells_for(stable_schedule(problem.path(direction), mode, cfg).schedule.dwells(), direction);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  auto ok = [&](double p0) {
    const auto d = schedule_at(p0);
    return d && detail::feasible(*d, problem);
  };
  std::vector<double> grid(opt.p0_grid);
  for (int i = 0; i < opt.p0_grid; ++i)
    grid[i] = opt.p0_min + (opt.p0_max - opt.p0_min) * i / (opt.p0_grid - 1);
  const auto p0 = detail::first_crossing(grid, ok, opt.bisections);
  if (!p0) return {};
  const auto d = schedule_at(*p0);
  return {std::accumulate(d->begin(), d->end(), 0.0), *p0};
}

inline MethodRunner uniform_runner(const OptimizationProblem& problem, SearchOptions opt = {}) {
  return [problem, opt](double purity) {
    return uniform_time_for(problem.with_constraints(problem.constraints().with_purity(purity)), opt);
  };
}

inline MethodRunner stable_runner(const OptimizationProblem& problem, Direction direction, Mode mode,
                                  SearchOptions opt = {}) {
  return [problem, direction, mode, opt](double purity) {
    return stable_time_for(problem.with_constraints(problem.constraints().with_purity(purity)), direction, mode, opt)
        .time;
  };
}

/// GA+SQP at each level. The runner remembers its last feasible schedule and
/// offers it to the next GA as a seed, so descending sweeps warm-start.
inline MethodRunner optimized_runner(const OptimizationProblem& problem, GaConfig config = {}) {
  auto last = std::make_shared<std::vector<double>>();
  return [problem, config, last](double purity) {
    GaConfig cfg = config;
    if (!last->empty()) cfg.seeds.push_back(*last);
    const auto r = optimize(problem.with_constraints(problem.constraints().with_purity(purity)), cfg);
    if (!r.feasible) return kInf;
    *last = r.schedule.dwells();
    return r.total_time;
  };
}

/// (purity, time) per level, in the order given. Levels run from the highest
/// down; a schedule that meets a higher level also meets every lower one, so
/// each reported time is the best found at that level or above.
inline std::vector<std::pair<double, double>> time_to_purity(const MethodRunner& runner,
                                                             const std::vector<double>& levels) {
  for (double p : levels)
    if (!(p > 0.0 && p < 1.0)) throw InputError("time_to_purity: purity levels must lie in (0, 1)");
  std::vector<size_t> order(levels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return levels[a] > levels[b]; });

  std::vector<std::pair<double, double>> out(levels.size());
  double best_above = kInf;
  for (size_t i : order) {
    const double t = std::min(runner(levels[i]), best_above);
    best_above = t;
    out[i] = {levels[i], t};
  }
  return out;
}

inline const std::vector<double>& default_purity_grid() {
  static const std::vector<double> grid{0.80, 0.85, 0.90, 0.95, 0.99};
  return grid;
}

// ---------------------------------------------------------------------------
// Method comparison
// ---------------------------------------------------------------------------

struct EndPurity {
  Mode input_mode = Mode::A;
  Direction direction = Direction::CCW;
  double zeta_A = 0.0;
  double zeta_B = 0.0;

  bool operator==(const EndPurity&) const = default;
};

struct MethodReport {
  ScheduleMethod method = ScheduleMethod::Uniform;
  double total_time = 0.0;
  std::vector<EndPurity> ends;          // one per (input mode, direction)
  std::map<Mode, double> ci;            // chiral index per input mode
  std::vector<std::pair<double, double>> time_to_purity;
  std::vector<double> dwells;           // shared orientation

  bool operator==(const MethodReport&) const = default;
};

struct CompareOptions {
  double p0 = 0.9;  // stable conversion
  GaConfig ga;
  std::vector<double> purity_levels;  // empty: skip time-to-purity sweeps
  SearchOptions search;
};

/// End purities and CI for both input modes and directions under one shared schedule.
inline MethodReport evaluate_schedule(const OptimizationProblem& problem, const Schedule& schedule) {
  MethodReport r;
  r.method = schedule.method();
  r.total_time = schedule.total_time();
  r.dwells = schedule.dwells();
  for (Mode m : {Mode::A, Mode::B}) {
    const auto ccw = run_trace(problem.path(Direction::CCW), for_direction(schedule, Direction::CCW), m);
    const auto cw = run_trace(problem.path(Direction::CW), for_direction(schedule, Direction::CW), m);
    for (const auto* t : {&ccw, &cw}) r.ends.push_back({m, t->direction, t->end().zeta_A, t->end().zeta_B});
    r.ci[m] = chiral_index(ccw, cw);
  }
  return r;
}

/// One report per method. Stable conversion is built on CCW mode A; uniform
/// gets the optimized schedule's total time as its budget.
inline std::vector<MethodReport> compare_methods(const OptimizationProblem& problem,
                                                 const std::vector<ScheduleMethod>& methods,
                                                 const CompareOptions& options = {}) {
  const bool need_opt = std::find(methods.begin(), methods.end(), ScheduleMethod::Optimized) != methods.end() ||
                        std::find(methods.begin(), methods.end(), ScheduleMethod::Uniform) != methods.end();
  std::optional<OptimizedSchedule> opt;
  if (need_opt) opt = optimize(problem, options.ga);

  // Time-to-purity compares methods on what each can actually deliver: the
  // baselines are measured on the CCW scenarios of the first input mode.
  const auto& cs = problem.constraints();
  const Mode base_mode = cs.input_modes().front();
  const auto baseline = problem.with_constraints(
      ConstraintSet({Direction::CCW}, {base_mode}, {{{Direction::CCW, base_mode}, cs.targets().at({Direction::CCW, base_mode})}}));

  std::vector<MethodReport> out;
  for (auto method : methods) {
    MethodReport r;
    switch (method) {
      case ScheduleMethod::Optimized:
        r = evaluate_schedule(problem, opt->schedule);
        if (!options.purity_levels.empty())
          r.time_to_purity = time_to_purity(optimized_runner(problem, options.ga), options.purity_levels);
        break;
      case ScheduleMethod::Stable: {
        SchedulerConfig cfg;
        cfg.p0 = options.p0;
        r = evaluate_schedule(problem, stable_schedule(problem.path(Direction::CCW), Mode::A, cfg).schedule);
        if (!options.purity_levels.empty())
          r.time_to_purity = time_to_purity(stable_runner(baseline, Direction::CCW, base_mode, options.search),
                                            options.purity_levels);
        break;
      }
      case ScheduleMethod::Uniform:
        r = evaluate_schedule(problem, uniform_schedule(problem.dimension(), opt->total_time));
        if (!options.purity_levels.empty())
          r.time_to_purity = time_to_purity(uniform_runner(baseline, options.search), options.purity_levels);
        break;
    }
    out.push_back(std::move(r));
  }
  return out;
}

// JSON: infinite times become null and come back as +inf.

inline void to_json(nlohmann::json& j, const MethodReport& r) {
  j["method"] = to_string(r.method);
  j["total_time"] = r.total_time;
  j["ci"] = nlohmann::json::object();
  for (const auto& [m, v] : r.ci) j["ci"][to_string(m)] = v;
  j["ends"] = nlohmann::json::array();
  for (const auto& e : r.ends)
    j["ends"].push_back({{"input_mode", to_string(e.input_mode)},
                         {"direction", to_string(e.direction)},
                         {"zeta_A_end", e.zeta_A},
                         {"zeta_B_end", e.zeta_B}});
  j["time_to_purity"] = nlohmann::json::array();
  for (const auto& [p, t] : r.time_to_purity)
    j["time_to_purity"].push_back({p, std::isfinite(t) ? nlohmann::json(t) : nlohmann::json(nullptr)});
  j["dwells"] = r.dwells;
}

inline void from_json(const nlohmann::json& j, MethodReport& r) {
  r.method = parse_schedule_method(j.at("method").get<std::string>());
  r.total_time = j.at("total_time").get<double>();
  r.ci.clear();
  for (const auto& [k, v] : j.at("ci").items()) r.ci[parse_mode(k)] = v.get<double>();
  r.ends.clear();
  for (const auto& e : j.at("ends"))
    r.ends.push_back({parse_mode(e.at("input_mode").get<std::string>()),
                      parse_direction(e.at("direction").get<std::string>()), e.at("zeta_A_end").get<double>(),
                      e.at("zeta_B_end").get<double>()});
  r.time_to_purity.clear();
  for (const auto& s : j.at("time_to_purity"))
    r.time_to_purity.emplace_back(s.at(0).get<double>(), s.at(1).is_null() ? kInf : s.at(1).get<double>());
  r.dwells = j.at("dwells").get<std::vector<double>>();
}

}  // namespace epsteer

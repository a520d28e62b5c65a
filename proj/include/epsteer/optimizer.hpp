#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "evolution.hpp"
#include "scheduler.hpp"
#include "sqp.hpp"

namespace epsteer {

/// One (direction, input mode) experiment and the end mode it must reach.
struct Scenario {
  Direction direction = Direction::CCW;
  Mode input = Mode::A;
  Mode target = Mode::B;
  double purity = 0.9;

  std::string label() const { return to_string(direction) + "_" + to_string(input) + "_to_" + to_string(target); }
};

struct Target {
  Mode mode = Mode::B;
  double purity = 0.9;
};

class ConstraintSet {
 public:
  ConstraintSet() = default;
  ConstraintSet(std::vector<Direction> directions, std::vector<Mode> input_modes,
                std::map<std::pair<Direction, Mode>, Target> targets)
      : directions_(std::move(directions)), modes_(std::move(input_modes)), targets_(std::move(targets)) {
    validate();
  }

  /// A->B and B->B going CCW, A->A and B->A going CW.
  static ConstraintSet chiral(double purity) {
    return {{Direction::CCW, Direction::CW},
            {Mode::A, Mode::B},
            {{{Direction::CCW, Mode::A}, {Mode::B, purity}},
             {{Direction::CW, Mode::A}, {Mode::A, purity}},
             {{Direction::CCW, Mode::B}, {Mode::B, purity}},
             {{Direction::CW, Mode::B}, {Mode::A, purity}}}};
  }

  /// A->B in both directions.
  static ConstraintSet nonchiral(double purity) {
    return {{Direction::CCW, Direction::CW},
            {Mode::A},
            {{{Direction::CCW, Mode::A}, {Mode::B, purity}}, {{Direction::CW, Mode::A}, {Mode::B, purity}}}};
  }

  void validate() const {
    if (directions_.empty()) throw InputError("constraints: at least one direction is required");
    if (modes_.empty()) throw InputError("constraints: at least one input mode is required");
    auto unique = [](auto v) {
      std::sort(v.begin(), v.end());
      return std::adjacent_find(v.begin(), v.end()) == v.end();
    };
    if (!unique(directions_)) throw InputError("constraints: duplicate direction");
    if (!unique(modes_)) throw InputError("constraints: duplicate input mode");
    if (targets_.size() != directions_.size() * modes_.size())
      throw InputError("constraints: every (direction, input mode) pair needs exactly one target");
    for (auto d : directions_)
      for (auto m : modes_) {
        const auto it = targets_.find({d, m});
        if (it == targets_.end())
          throw InputError("constraints: missing target for " + to_string(d) + "/" + to_string(m));
        if (!(it->second.purity > 0.0 && it->second.purity < 1.0))
          throw InputError("constraints: purity for " + to_string(d) + "/" + to_string(m) + " must lie in (0, 1)");
      }
  }

  /// Same targets with every purity replaced.
  ConstraintSet with_purity(double purity) const {
    auto t = targets_;
    for (auto& [k, v] : t) v.purity = purity;
    return {directions_, modes_, std::move(t)};
  }

  std::vector<Scenario> scenarios() const {
    std::vector<Scenario> out;
    for (auto d : directions_)
      for (auto m : modes_) {
        const auto& t = targets_.at({d, m});
        out.push_back({d, m, t.mode, t.purity});
      }
    return out;
  }

  const std::vector<Direction>& directions() const { return directions_; }
  const std::vector<Mode>& input_modes() const { return modes_; }
  const std::map<std::pair<Direction, Mode>, Target>& targets() const { return targets_; }

 private:
  std::vector<Direction> directions_;
  std::vector<Mode> modes_;
  std::map<std::pair<Direction, Mode>, Target> targets_;
};

/// Family, loop and constraints with per-direction eigensystems cached once.
class OptimizationProblem {
 public:
  OptimizationProblem(HamiltonianFamily family, const ParameterLoop& loop, ConstraintSet constraints,
                      double ep_radius = kDefaultEpRadius)
      : family_(std::move(family)), constraints_(std::move(constraints)) {
    constraints_.validate();
    const ParameterLoop base = loop.direction == Direction::CCW ? loop : orient(loop, Direction::CW);
    ccw_ = std::make_shared<const PathEigensystems>(compute_eigensystems(family_, base, ep_radius));
    cw_ = std::make_shared<const PathEigensystems>(
        compute_eigensystems(family_, orient(base, Direction::CW), ep_radius));
    scenarios_ = constraints_.scenarios();
  }

  /// Same family and loop (and cached eigensystems) with new constraints.
  OptimizationProblem with_constraints(ConstraintSet constraints) const {
    OptimizationProblem p = *this;
    constraints.validate();
    p.constraints_ = std::move(constraints);
    p.scenarios_ = p.constraints_.scenarios();
    return p;
  }

  const HamiltonianFamily& family() const { return family_; }
  const ParameterLoop& loop() const { return ccw_->path; }
  const ConstraintSet& constraints() const { return constraints_; }
  const std::vector<Scenario>& scenarios() const { return scenarios_; }
  int dimension() const { return ccw_->n_intervals(); }
  const PathEigensystems& path(Direction d) const { return d == Direction::CCW ? *ccw_ : *cw_; }

 private:
  HamiltonianFamily family_;
  ConstraintSet constraints_;
  std::shared_ptr<const PathEigensystems> ccw_, cw_;
  std::vector<Scenario> scenarios_;
};

inline void check_dwells(const std::vector<double>& dwells, const OptimizationProblem& problem) {
  if (static_cast<int>(dwells.size()) != problem.dimension())
    throw InputError("dwell vector has length " + std::to_string(dwells.size()) + ", expected " +
                     std::to_string(problem.dimension()));
  for (double d : dwells)
    if (!(d >= 0.0) || !std::isfinite(d)) throw InputError("dwells must be finite and >= 0");
}

/// End purity of the target mode for every scenario, in scenario order.
inline std::vector<double> scenario_purities(const std::vector<double>& dwells, const OptimizationProblem& problem) {
  std::vector<double> out;
  out.reserve(problem.scenarios().size());
  const auto reversed = dwells_for(dwells, Direction::CW);
  for (const auto& sc : problem.scenarios()) {
    const auto& d = sc.direction == Direction::CCW ? dwells : reversed;
    const auto [za, zb] = end_projection(problem.path(sc.direction), d, sc.input);
    out.push_back(sc.target == Mode::A ? za : zb);
  }
  return out;
}

inline double purity_penalty(const std::vector<double>& purities, const OptimizationProblem& problem) {
  double pen = 0.0;
  for (size_t k = 0; k < purities.size(); ++k) {
    const double short_by = std::max(0.0, problem.scenarios()[k].purity - purities[k]);
    pen += short_by * short_by;
  }
  return pen;
}

inline bool meets_targets(const std::vector<double>& purities, const OptimizationProblem& problem) {
  for (size_t k = 0; k < purities.size(); ++k)
    if (!(purities[k] >= problem.scenarios()[k].purity)) return false;
  return true;
}

inline constexpr double kDefaultPenaltyWeight = 1e4;

/// Total time plus a quadratic penalty on every purity shortfall.
inline double fitness(const std::vector<double>& dwells, const OptimizationProblem& problem,
                      double penalty_weight = kDefaultPenaltyWeight) {
  check_dwells(dwells, problem);
  try {
    const double total = std::accumulate(dwells.begin(), dwells.end(), 0.0);
    return total + penalty_weight * purity_penalty(scenario_purities(dwells, problem), problem);
  } catch (const Error&) {
    return kInf;
  }
}

inline int support_size(const std::vector<double>& d) {
  return static_cast<int>(std::count_if(d.begin(), d.end(), [](double v) { return v > 0.0; }));
}

/// Worker count: an explicit request wins, then EPSTEER_THREADS, then the
/// hardware. Zero means "auto" at each level.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EPSTEER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct GaConfig {
  int population = 64;
  int generations = 200;
  double crossover_rate = 0.9;
  double mutation_rate = 0.15;
  double sparsity_weight = 1e-3;
  double penalty_weight = kDefaultPenaltyWeight;
  std::uint64_t seed = 42;
  int elites = 2;
  int tournament = 3;
  double dwell_cap = 50.0;
  int threads = 0;
  /// Extra starting individuals (shared orientation), e.g. warm starts.
  std::vector<std::vector<double>> seeds;

  void validate() const {
    auto rate = [](double r, const char* name) {
      if (!(r >= 0.0 && r <= 1.0)) throw InputError(std::string("ga.") + name + " must lie in [0, 1]");
    };
    rate(crossover_rate, "crossover_rate");
    rate(mutation_rate, "mutation_rate");
    if (population < 2) throw InputError("ga.population must be >= 2");
    if (generations < 0) throw InputError("ga.generations must be >= 0");
    if (elites < 0 || elites >= population) throw InputError("ga.elites must lie in [0, population)");
    if (tournament < 1) throw InputError("ga.tournament must be >= 1");
    if (!(sparsity_weight >= 0.0) || !(penalty_weight > 0.0)) throw InputError("ga weights must be >= 0");
    if (!(dwell_cap > 0.0)) throw InputError("ga.dwell_cap must be positive");
  }
};

struct GaResult {
  std::vector<double> best;
  double best_fitness = kInf;
  std::vector<double> history;  // best fitness so far, one entry per generation
};

namespace detail {

// Fitness of every individual; the pool is static-striped so results do not
// depend on scheduling.
inline std::vector<double> evaluate_all(const std::vector<std::vector<double>>& pop,
                                        const OptimizationProblem& problem, double weight, int threads) {
  std::vector<double> fit(pop.size());
  const int t = std::min<int>(threads, static_cast<int>(pop.size()));
  auto work = [&](int w) {
    for (size_t i = w; i < pop.size(); i += t) fit[i] = fitness(pop[i], problem, weight);
  };
  if (t <= 1) {
    work(0);
    return fit;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int w = 0; w < t; ++w) pool.emplace_back(work, w);
  for (auto& th : pool) th.join();
  return fit;
}

// Stable schedules for each (direction, input mode) pair that asks for a
// conversion, mapped back to the shared orientation.
inline std::vector<std::vector<double>> stable_seeds(const OptimizationProblem& problem) {
  std::vector<std::vector<double>> out;
  for (const auto& sc : problem.scenarios()) {
    SchedulerConfig cfg;
    cfg.p0 = sc.purity;
    try {
      const auto r = stable_schedule(problem.path(sc.direction), sc.input, cfg);
      out.push_back(dwells_for(r.schedule.dwells(), sc.direction));
    } catch (const Error&) {
      // Some pairs have no stable schedule (e.g. an unreachable mode); skip them.
    }
  }
  return out;
}

}  // namespace detail

/// Real-coded GA over non-negative dwell vectors. Selection works on fitness
/// plus a small per-support-point charge; the returned individual is the
/// lowest plain fitness ever evaluated.
inline GaResult ga_search(const OptimizationProblem& problem, const GaConfig& config = {}) {
  config.validate();
  const int n = problem.dimension();
  const int threads = resolve_threads(config.threads);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) { return lo * std::exp(unit(rng) * std::log(hi / lo)); };
  auto pick = [&](int k) { return static_cast<int>(unit(rng) * k) % k; };

  std::vector<std::vector<double>> pop;
  pop.reserve(config.population);
  auto add = [&](std::vector<double> v) {
    if (static_cast<int>(pop.size()) >= config.population || static_cast<int>(v.size()) != n) return;
    for (auto& x : v) x = std::clamp(x, 0.0, config.dwell_cap);
    pop.push_back(std::move(v));
  };
  for (const auto& s : config.seeds) add(s);
  for (auto& s : detail::stable_seeds(problem)) add(std::move(s));
  for (double total : {0.5, 1.0, 2.0, 4.0, 8.0}) add(std::vector<double>(n, total / n));
  while (static_cast<int>(pop.size()) < config.population) {
    std::vector<double> v(n, 0.0);
    const double density = 0.01 + 0.09 * unit(rng);
    for (auto& x : v)
      if (unit(rng) < density) x = log_uniform(1e-2, 2.0);
    add(std::move(v));
  }

  GaResult out;
  const double activate = config.mutation_rate * 3.0 / n;
  for (int gen = 0;; ++gen) {
    const auto fit = detail::evaluate_all(pop, problem, config.penalty_weight, threads);
    std::vector<double> score(pop.size());
    for (size_t i = 0; i < pop.size(); ++i) {
      score[i] = fit[i] + config.sparsity_weight * support_size(pop[i]);
      if (fit[i] < out.best_fitness) {
        out.best_fitness = fit[i];
        out.best = pop[i];
      }
    }
    out.history.push_back(out.best_fitness);
    if (gen == config.generations) break;

    std::vector<int> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] < score[b]; });

    auto tournament = [&]() {
      int best = pick(config.population);
      for (int k = 1; k < config.tournament; ++k) {
        const int c = pick(config.population);
        if (score[c] < score[best]) best = c;
      }
      return best;
    };

    std::vector<std::vector<double>> next;
    next.reserve(config.population);
    for (int e = 0; e < config.elites; ++e) next.push_back(pop[order[e]]);
    while (static_cast<int>(next.size()) < config.population) {
      const auto& a = pop[tournament()];
      const auto& b = pop[tournament()];
      std::vector<double> child = a;
      if (unit(rng) < config.crossover_rate)
        for (int j = 0; j < n; ++j)
          if (unit(rng) < 0.5) child[j] = b[j];

      for (int j = 0; j < n; ++j) {
        if (child[j] > 0.0) {
          if (unit(rng) >= config.mutation_rate) continue;
          const double r = unit(rng);
          if (r < 0.25) {
            child[j] = 0.0;  // jump: skip the point entirely
          } else if (r < 0.4) {
            const int k = std::clamp(j + (unit(rng) < 0.5 ? -1 : 1), 0, n - 1);
            child[k] += child[j];
            if (k != j) child[j] = 0.0;
          } else {
            child[j] *= std::exp(0.5 * gauss(rng));
          }
        } else if (unit(rng) < activate) {
          child[j] = log_uniform(1e-3, 1.0);
        }
      }
      if (unit(rng) < config.mutation_rate) {
        const double s = std::exp(0.2 * gauss(rng));
        for (auto& x : child) x *= s;
      }
      for (auto& x : child) x = std::clamp(x, 0.0, config.dwell_cap);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
  }
  return out;
}

struct RefineOptions {
  SqpOptions sqp;
  double margin = 1e-7;  // refined constraints aim at purity + margin
  double penalty_weight = kDefaultPenaltyWeight;
  double dwell_cap = 50.0;
};

struct RefineResult {
  std::vector<double> dwells;
  int iterations = 0;
  bool warning = false;  // no feasible iterate; start returned unchanged
};

/// SQP over the positive entries of `start` (zeros stay frozen). Returns the
/// lowest-fitness feasible point seen, the start included.
inline RefineResult sqp_refine(const OptimizationProblem& problem, const std::vector<double>& start,
                               const RefineOptions& options = {}) {
  check_dwells(start, problem);
  std::vector<int> active;
  for (int j = 0; j < problem.dimension(); ++j)
    if (start[j] > 0.0) active.push_back(j);

  RefineResult out;
  out.dwells = start;
  double best_fit = kInf;
  bool any_feasible = false;

  auto expand = [&](const Eigen::VectorXd& x) {
    std::vector<double> d = start;
    for (size_t k = 0; k < active.size(); ++k) d[active[k]] = std::max(0.0, x[static_cast<Eigen::Index>(k)]);
    return d;
  };
  // Feasible points compete on fitness. A feasible start is one of them, so
  // fitness never rises; an infeasible start gives way to any feasible iterate.
  auto consider = [&](const std::vector<double>& d) {
    std::vector<double> z;
    try {
      z = scenario_purities(d, problem);
    } catch (const Error&) {
      return;
    }
    if (!meets_targets(z, problem)) return;
    any_feasible = true;
    const double f = fitness(d, problem, options.penalty_weight);
    if (f < best_fit) {
      best_fit = f;
      out.dwells = d;
    }
  };

  if (active.empty()) {
    consider(start);
    out.warning = !any_feasible;
    return out;
  }

  const auto m = static_cast<Eigen::Index>(active.size());
  NlpFunctions fn;
  fn.f = [](const Eigen::VectorXd& x) { return x.sum(); };
  fn.grad_f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Ones(x.size()); };
  fn.c = [&](const Eigen::VectorXd& x) {
    const auto d = expand(x);
    Eigen::VectorXd c(problem.scenarios().size());
    try {
      const auto z = scenario_purities(d, problem);
      for (size_t k = 0; k < z.size(); ++k)
        c[static_cast<Eigen::Index>(k)] = z[k] - problem.scenarios()[k].purity - options.margin;
    } catch (const Error&) {
      c.setConstant(-1.0);
    }
    return c;
  };

  Eigen::VectorXd x0(m);
  for (Eigen::Index k = 0; k < m; ++k) x0[k] = start[active[k]];
  const Eigen::VectorXd lb = Eigen::VectorXd::Zero(m);
  const Eigen::VectorXd ub = Eigen::VectorXd::Constant(m, options.dwell_cap);
  const auto trace = sqp_minimize(fn, x0, lb, ub, options.sqp, [&](const Eigen::VectorXd& x) { consider(expand(x)); });
  out.iterations = trace.iterations;
  if (!any_feasible) {
    out.dwells = start;
    out.warning = true;
  }
  return out;
}

/// Tries to drop small dwells one at a time, smallest first: each removal is
/// re-refined and kept only if the result stays feasible and is no slower.
inline void prune_support(const OptimizationProblem& problem, RefineResult& current, const RefineOptions& options,
                          double relative_size = 0.05) {
  const auto total = [](const std::vector<double>& d) { return std::accumulate(d.begin(), d.end(), 0.0); };
  for (bool changed = true; changed;) {
    changed = false;
    const double t0 = total(current.dwells);
    std::vector<int> order;
    for (int j = 0; j < problem.dimension(); ++j)
      if (current.dwells[j] > 0.0 && current.dwells[j] < relative_size * t0) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return current.dwells[a] < current.dwells[b]; });
    for (int j : order) {
      auto trial = current.dwells;
      trial[j] = 0.0;
      auto r = sqp_refine(problem, trial, options);
      if (r.warning || !(total(r.dwells) <= t0)) continue;
      r.iterations += current.iterations;
      current = std::move(r);
      changed = true;
      break;
    }
  }
}

struct OptimizationReport {
  int generations = 0;
  std::vector<double> history;
  int refinement_iterations = 0;
  bool refinement_warning = false;
  double ga_fitness = kInf;
  double final_fitness = kInf;
  std::uint64_t seed = 0;
};

struct OptimizedSchedule {
  Schedule schedule;
  std::vector<std::pair<std::string, double>> achieved;  // scenario label -> end purity of its target
  double total_time = 0.0;
  bool feasible = false;
  OptimizationReport report;
};

/// Achieved purities from an independent run of full traces.
inline std::vector<std::pair<std::string, double>> achieved_purities(const std::vector<double>& dwells,
                                                                     const OptimizationProblem& problem) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& sc : problem.scenarios()) {
    const auto tr = run_trace(problem.path(sc.direction), dwells_for(dwells, sc.direction), sc.input);
    out.emplace_back(sc.label(), tr.end_zeta(sc.target));
  }
  return out;
}

inline OptimizedSchedule optimize(const OptimizationProblem& problem, const GaConfig& config = {},
                                  RefineOptions refine = {}) {
  config.validate();
  refine.penalty_weight = config.penalty_weight;
  refine.dwell_cap = config.dwell_cap;
  const auto ga = ga_search(problem, config);
  auto sqp = sqp_refine(problem, ga.best, refine);
  if (!sqp.warning) prune_support(problem, sqp, refine);

  OptimizedSchedule out;
  out.schedule = Schedule(sqp.dwells, ScheduleMethod::Optimized);
  out.total_time = out.schedule.total_time();
  out.achieved = achieved_purities(sqp.dwells, problem);
  out.feasible = true;
  for (size_t k = 0; k < out.achieved.size(); ++k)
    if (!(out.achieved[k].second >= problem.scenarios()[k].purity)) out.feasible = false;
  out.report.generations = config.generations;
  out.report.history = ga.history;
  out.report.refinement_iterations = sqp.iterations;
  out.report.refinement_warning = sqp.warning;
  out.report.ga_fitness = ga.best_fitness;
  out.report.final_fitness = fitness(sqp.dwells, problem, config.penalty_weight);
  out.report.seed = config.seed;
  return out;
}

}  // namespace epsteer

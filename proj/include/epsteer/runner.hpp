#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <openssl/evp.h>

#include "config.hpp"
#include "io.hpp"

namespace epsteer {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitInfeasible = 2 };

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

struct RunOutcome {
  int exit_code = kExitOk;
  std::string summary;
  std::map<std::string, std::string> files;  // name -> contents, manifest included
};

namespace detail {

inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// Preset targets for the (direction, mode) pairs the config selects.
inline ConstraintSet selected_targets(const RunConfig& c) {
  const auto all = c.constraints();
  std::map<std::pair<Direction, Mode>, Target> t;
  for (auto d : c.directions)
    for (auto m : c.modes) {
      const auto it = all.targets().find({d, m});
      if (it == all.targets().end())
        throw ConfigError("config.modes", "preset has no target for " + to_string(d) + " mode " + to_string(m));
      t[{d, m}] = it->second;
    }
  return ConstraintSet(c.directions, c.modes, std::move(t));
}

inline void add_traces(RunOutcome& out, const OptimizationProblem& problem, const Schedule& shared,
                       const std::vector<std::pair<Direction, Mode>>& runs, std::vector<std::string>& names) {
  for (const auto& [d, m] : runs) {
    const auto trace = run_trace(problem.path(d), for_direction(shared, d), m);
    const std::string name = "trace_" + to_string(d) + "_" + to_string(m) + ".csv";
    out.files[name] = io::trace_csv(trace);
    names.push_back(name);
  }
}

inline std::string schedule_summary(const RunConfig& c, const OptimizationProblem& problem, const Schedule& shared,
                                    const std::vector<std::pair<Direction, Mode>>& runs) {
  const auto rep = evaluate_schedule(problem, shared);
  std::string s = "method=" + to_string(c.method) + " total_time=" + fmt(shared.total_time()) + " end:";
  for (const auto& [d, m] : runs)
    for (const auto& e : rep.ends)
      if (e.direction == d && e.input_mode == m)
        s += " " + to_string(d) + "_" + to_string(m) + "(zeta_A=" + fmt(e.zeta_A) + ",zeta_B=" + fmt(e.zeta_B) + ")";
  s += " CI:";
  std::vector<Mode> modes;
  for (const auto& [d, m] : runs)
    if (std::find(modes.begin(), modes.end(), m) == modes.end()) modes.push_back(m);
  for (auto m : modes) s += " " + to_string(m) + "=" + fmt(rep.ci.at(m));
  return s;
}

inline std::vector<std::pair<Direction, Mode>> pairs(const RunConfig& c) {
  std::vector<std::pair<Direction, Mode>> v;
  for (auto d : c.directions)
    for (auto m : c.modes) v.emplace_back(d, m);
  return v;
}

}  // namespace detail

/// Runs the configured method and returns every artifact in memory; throws on error.
inline RunOutcome execute(const RunConfig& c) {
  validate(c);
  RunOutcome out;
  out.files["effective_config.json"] = detail::dump(to_json(c));
  const auto family = c.make_family();

  if (c.method == RunMethod::Sheets) {
    const auto& s = c.sheets;
    const auto nodes = sheet_sample(family, SheetGrid::uniform(s.x_min, s.x_max, s.nx, s.y_min, s.y_max, s.ny));
    out.files["sheets.csv"] = io::sheets_csv(nodes);
    out.files["plot_sheets.py"] = io::plot_script_sheets();
    out.summary = "method=sheets nodes=" + std::to_string(nodes.size());
  } else {
    const auto loop = build_loop(c.loop);
    out.files["loop.csv"] = io::loop_csv(loop);
    const OptimizationProblem problem(family, loop, c.constraints());
    std::vector<std::string> traces;

    switch (c.method) {
      case RunMethod::Uniform: {
        double total = 0.0;
        if (c.total_time) {
          total = *c.total_time;
        } else {
          total = uniform_time_for(problem.with_constraints(detail::selected_targets(c)));
          if (!std::isfinite(total)) throw Error("no uniform total time meets the selected targets");
        }
        const auto sched = uniform_schedule(problem.dimension(), total);
        detail::add_traces(out, problem, sched, detail::pairs(c), traces);
        out.files["schedule.json"] = detail::dump(io::schedule_json(sched));
        out.files["schedule.csv"] = io::schedule_csv(sched);
        out.summary = detail::schedule_summary(c, problem, sched, detail::pairs(c));
        break;
      }
      case RunMethod::Stable: {
        SchedulerConfig sc;
        sc.p0 = c.p0;
        const Direction d = c.directions.front();
        const auto r = stable_schedule(problem.path(d), c.modes.front(), sc);
        const Schedule sched(dwells_for(r.schedule.dwells(), d), ScheduleMethod::Stable);  // back to shared order
        detail::add_traces(out, problem, sched, detail::pairs(c), traces);
        out.files["schedule.json"] = detail::dump(io::schedule_json(sched));
        out.files["schedule.csv"] = io::schedule_csv(sched);
        out.summary = detail::schedule_summary(c, problem, sched, detail::pairs(c));
        break;
      }
      case RunMethod::Optimize: {
        const auto r = optimize(problem, c.ga);
        std::vector<std::pair<Direction, Mode>> runs;
        for (const auto& s : problem.scenarios()) runs.emplace_back(s.direction, s.input);
        detail::add_traces(out, problem, r.schedule, runs, traces);
        out.files["schedule.json"] = detail::dump(io::schedule_json(r.schedule));
        out.files["schedule.csv"] = io::schedule_csv(r.schedule);
        out.files["report.json"] = detail::dump(io::report_json(r));
        out.summary = detail::schedule_summary(c, problem, r.schedule, runs) +
                      " feasible=" + (r.feasible ? "true" : "false");
        if (!r.feasible) out.exit_code = kExitInfeasible;
        break;
      }
      case RunMethod::Compare: {
        CompareOptions opt;
        opt.p0 = c.p0;
        opt.ga = c.ga;
        opt.purity_levels = c.purity_levels;
        const auto reps = compare_methods(
            problem, {ScheduleMethod::Optimized, ScheduleMethod::Stable, ScheduleMethod::Uniform}, opt);
        out.files["comparison.csv"] = io::comparison_csv(reps);
        out.files["comparison.json"] = detail::dump(nlohmann::json(reps));
        out.files["plot_comparison.py"] = io::plot_script_comparison();
        out.summary = "method=compare";
        for (const auto& r : reps) {
          out.summary += " " + to_string(r.method) + "(total_time=" + detail::fmt(r.total_time);
          for (const auto& [m, ci] : r.ci) out.summary += ",CI_" + to_string(m) + "=" + detail::fmt(ci);
          out.summary += ")";
        }
        break;
      }
      case RunMethod::Sheets:
        break;
    }
    if (!traces.empty()) {
      out.files["plot_traces.py"] = io::plot_script_traces(traces);
      out.files["plot_schedule.py"] = io::plot_script_schedule();
    }
  }

  nlohmann::json manifest = {{"files", nlohmann::json::array()}};
  for (const auto& [name, body] : out.files)
    manifest["files"].push_back({{"name", name}, {"bytes", body.size()}, {"sha256", sha256_hex(body)}});
  out.files["manifest.json"] = detail::dump(manifest);
  return out;
}

inline void write_outputs(const RunOutcome& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, body] : r.files) {
    std::ofstream f(dir / name, std::ios::binary);
    f << body;
    if (!f) throw Error("cannot write " + (dir / name).string());
  }
}

/// Computes, then writes artifacts into c.out and prints the one-line summary.
/// Returns 0 on success, 2 when optimization ends infeasible and 1 on any error.
inline int run(const RunConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const auto r = execute(c);
    write_outputs(r, c.out);
    out << r.summary << "\n";
    return r.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

/// Exceptional points inside the sheets region.
inline std::vector<ParameterPoint> locate(const RunConfig& c) {
  const auto& s = c.sheets;
  return locate_eps(c.make_family(), Region{s.x_min, s.x_max, s.y_min, s.y_max});
}

}  // namespace epsteer

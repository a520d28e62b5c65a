#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metrics.hpp"

namespace epsteer::io {

/// Shortest round-trip decimal for a double; infinities print as inf / -inf.
inline std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trace_csv(const EvolutionTrace& t) {
  std::ostringstream os;
  os << "j,x,y,dt,t_cum,P1,P2,re_omega_bar,im_omega_bar,zeta_A,zeta_B,speed\n";
  for (const auto& s : t.samples) {
    os << s.j << ',' << num(s.point.x) << ',' << num(s.point.y) << ',' << num(s.dt) << ',' << num(s.t_cum) << ','
       << num(s.proportions.at(0)) << ',' << num(s.proportions.at(1)) << ',' << num(s.omega_bar.real()) << ','
       << num(s.omega_bar.imag()) << ',' << num(s.zeta_A) << ',' << num(s.zeta_B) << ',' << num(s.speed) << '\n';
  }
  return os.str();
}

inline std::string loop_csv(const ParameterLoop& loop) {
  std::ostringstream os;
  os << "j,x,y,C_j\n";
  for (size_t j = 0; j < loop.points.size(); ++j)
    os << j << ',' << num(loop.points[j].x) << ',' << num(loop.points[j].y) << ',' << num(loop.arc[j]) << '\n';
  return os.str();
}

inline std::string schedule_csv(const Schedule& s) {
  std::ostringstream os;
  os << "j,dt\n";
  for (int j = 0; j < s.size(); ++j) os << j << ',' << num(s[j]) << '\n';
  return os.str();
}

inline nlohmann::json schedule_json(const Schedule& s) {
  return {{"method", to_string(s.method())}, {"dwells", s.dwells()}, {"total_time", s.total_time()}};
}

inline std::string sheets_csv(const std::vector<SheetNode>& nodes) {
  std::ostringstream os;
  os << "x,y,re_omega_1,im_omega_1,re_omega_2,im_omega_2\n";
  for (const auto& n : nodes)
    os << num(n.point.x) << ',' << num(n.point.y) << ',' << num(n.values[0].real()) << ',' << num(n.values[0].imag())
       << ',' << num(n.values[1].real()) << ',' << num(n.values[1].imag()) << '\n';
  return os.str();
}

/// One row per (method, input mode, direction); CI belongs to the input mode.
inline std::string comparison_csv(const std::vector<MethodReport>& reports) {
  std::ostringstream os;
  os << "method,input_mode,direction,zeta_A_end,zeta_B_end,total_time,CI\n";
  for (const auto& r : reports)
    for (const auto& e : r.ends)
      os << to_string(r.method) << ',' << to_string(e.input_mode) << ',' << to_string(e.direction) << ','
         << num(e.zeta_A) << ',' << num(e.zeta_B) << ',' << num(r.total_time) << ',' << num(r.ci.at(e.input_mode))
         << '\n';
  return os.str();
}

inline nlohmann::json report_json(const OptimizedSchedule& r) {
  nlohmann::json achieved = nlohmann::json::object();
  for (const auto& [label, z] : r.achieved) achieved[label] = z;
  return {{"feasible", r.feasible},
          {"achieved", achieved},
          {"total_time", r.total_time},
          {"history", r.report.history},
          {"seed", r.report.seed}};
}

// Standalone matplotlib scripts; each reads CSVs from its own directory.

inline std::string plot_script_traces(const std::vector<std::string>& trace_files) {
  std::ostringstream os;
  os << "#!/usr/bin/env python3\n"
        "\"\"\"Trajectories on the Im/Re plane and mode fractions along the loop.\"\"\"\n"
        "import csv, os, sys\n"
        "import matplotlib\n"
        "matplotlib.use('Agg')\n"
        "import matplotlib.pyplot as plt\n\n"
        "here = os.path.dirname(os.path.abspath(__file__))\n"
        "files = [";
  for (size_t i = 0; i < trace_files.size(); ++i) os << (i ? ", " : "") << "'" << trace_files[i] << "'";
  os << "]\n\n"
        "def load(name):\n"
        "    with open(os.path.join(here, name)) as f:\n"
        "        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(f)]\n\n"
        "fig, (ax1, ax2, ax3) = plt.subplots(1, 3, figsize=(15, 4.5))\n"
        "for name in files:\n"
        "    rows = load(name)\n"
        "    label = name[len('trace_'):-len('.csv')]\n"
        "    ax1.plot([r['re_omega_bar'] for r in rows], [r['im_omega_bar'] for r in rows], label=label)\n"
        "    ax2.plot([r['t_cum'] for r in rows], [r['zeta_B'] for r in rows], label=label + ' zeta_B')\n"
        "    ax3.plot([r['j'] for r in rows], [r['P1'] for r in rows], label=label)\n"
        "ax1.set_xlabel('Re omega_bar'); ax1.set_ylabel('Im omega_bar')\n"
        "ax2.set_xlabel('t'); ax2.set_ylabel('zeta_B')\n"
        "ax3.set_xlabel('j'); ax3.set_ylabel('P1')\n"
        "for ax in (ax1, ax2, ax3):\n"
        "    ax.legend(fontsize=7)\n"
        "fig.tight_layout()\n"
        "out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, 'traces.png')\n"
        "fig.savefig(out, dpi=150)\n";
  return os.str();
}

inline std::string plot_script_schedule() {
  return "#!/usr/bin/env python3\n"
         "\"\"\"Dwell time per loop point.\"\"\"\n"
         "import csv, os, sys\n"
         "import matplotlib\n"
         "matplotlib.use('Agg')\n"
         "import matplotlib.pyplot as plt\n\n"
         "here = os.path.dirname(os.path.abspath(__file__))\n"
         "with open(os.path.join(here, 'schedule.csv')) as f:\n"
         "    rows = list(csv.DictReader(f))\n"
         "fig, ax = plt.subplots(figsize=(8, 3.5))\n"
         "ax.bar([int(r['j']) + 1 for r in rows], [float(r['dt']) for r in rows], width=1.0)\n"
         "ax.set_xlabel('point index'); ax.set_ylabel('dwell time')\n"
         "fig.tight_layout()\n"
         "out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, 'schedule.png')\n"
         "fig.savefig(out, dpi=150)\n";
}

inline std::string plot_script_sheets() {
  return "#!/usr/bin/env python3\n"
         "\"\"\"Imaginary parts of both eigenvalue sheets over the parameter plane.\"\"\"\n"
         "import csv, os, sys\n"
         "import matplotlib\n"
         "matplotlib.use('Agg')\n"
         "import matplotlib.pyplot as plt\n\n"
         "here = os.path.dirname(os.path.abspath(__file__))\n"
         "with open(os.path.join(here, 'sheets.csv')) as f:\n"
         "    rows = [{k: float(v) for k, v in r.items()} for r in csv.DictReader(f)]\n"
         "fig = plt.figure(figsize=(7, 5))\n"
         "ax = fig.add_subplot(projection='3d')\n"
         "xs = [r['x'] for r in rows]; ys = [r['y'] for r in rows]\n"
         "ax.scatter(xs, ys, [r['im_omega_1'] for r in rows], s=1, label='sheet 1')\n"
         "ax.scatter(xs, ys, [r['im_omega_2'] for r in rows], s=1, label='sheet 2')\n"
         "ax.set_xlabel('x'); ax.set_ylabel('y'); ax.set_zlabel('Im omega')\n"
         "ax.legend()\n"
         "out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, 'sheets.png')\n"
         "fig.savefig(out, dpi=150)\n";
}

inline std::string plot_script_comparison() {
  return "#!/usr/bin/env python3\n"
         "\"\"\"End purities and chiral index per method, plus time to purity.\"\"\"\n"
         "import csv, json, os, sys\n"
         "import matplotlib\n"
         "matplotlib.use('Agg')\n"
         "import matplotlib.pyplot as plt\n\n"
         "here = os.path.dirname(os.path.abspath(__file__))\n"
         "with open(os.path.join(here, 'comparison.csv')) as f:\n"
         "    rows = list(csv.DictReader(f))\n"
         "with open(os.path.join(here, 'comparison.json')) as f:\n"
         "    reports = json.load(f)\n"
         "fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))\n"
         "labels = [f\"{r['method']} {r['input_mode']} {r['direction']}\" for r in rows]\n"
         "ax1.barh(labels, [float(r['zeta_B_end']) for r in rows])\n"
         "ax1.set_xlabel('zeta_B at loop end')\n"
         "for rep in reports:\n"
         "    pts = [(p, t) for p, t in rep['time_to_purity'] if t is not None]\n"
         "    if pts:\n"
         "        ax2.plot([p for p, _ in pts], [t for _, t in pts], 'o-', label=rep['method'])\n"
         "ax2.set_xlabel('purity'); ax2.set_ylabel('time'); ax2.set_yscale('log')\n"
         "if ax2.lines:\n"
         "    ax2.legend()\n"
         "fig.tight_layout()\n"
         "out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, 'comparison.png')\n"
         "fig.savefig(out, dpi=150)\n";
}

}  // namespace epsteer::io

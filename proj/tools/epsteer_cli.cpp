// epsteer command-line runner.
//
//   epsteer run --config cfg.json [--method optimize] [--direction cw] ...
//   epsteer sheets --out sheets_dir
//   epsteer compare --config configs/chiral_compare.json
//   epsteer locate-eps
//
// Exit status: 0 success, 2 infeasible optimization, 1 error.

#include <iostream>

#include <CLI11.hpp>

#include "epsteer/runner.hpp"

namespace {

struct Flags {
  std::string config;
  epsteer::ConfigOverrides over;
};

void add_common(CLI::App* cmd, Flags& f, bool with_method) {
  cmd->add_option("--config", f.config, "JSON config file (keys as in effective_config.json)");
  if (with_method)
    cmd->add_option("--method", f.over.method, "uniform | stable | optimize | compare | sheets");
  cmd->add_option("--direction", f.over.direction, "ccw, cw or ccw,cw");
  cmd->add_option("--mode", f.over.mode, "A, B or A,B");
  cmd->add_option("--p0", f.over.p0, "dominant-state floor for stable conversion, in (0, 1)");
  cmd->add_option("--purity", f.over.purity, "target end purity, in (0, 1)");
  cmd->add_option("--seed", f.over.seed, "GA seed");
  cmd->add_option("--out", f.over.out, "output directory");
}

epsteer::RunConfig resolve(const Flags& f) {
  return f.config.empty() ? epsteer::parse_config(nlohmann::json::object(), f.over)
                          : epsteer::load_config(f.config, f.over);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dwell-time scheduling for loops around exceptional points"};
  app.require_subcommand(1);

  Flags run_f, sheets_f, compare_f, locate_f;
  auto* run = app.add_subcommand("run", "run the configured method and write artifacts");
  add_common(run, run_f, true);
  auto* sheets = app.add_subcommand("sheets", "sample both eigenvalue sheets on a grid");
  add_common(sheets, sheets_f, false);
  auto* compare = app.add_subcommand("compare", "optimized vs stable vs uniform on one loop");
  add_common(compare, compare_f, false);
  auto* locate = app.add_subcommand("locate-eps", "print exceptional points inside the sheets region");
  add_common(locate, locate_f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : epsteer::kExitError;
  }

  try {
    if (*run) return epsteer::run(resolve(run_f));
    if (*sheets) {
      sheets_f.over.method = "sheets";
      return epsteer::run(resolve(sheets_f));
    }
    if (*compare) {
      compare_f.over.method = "compare";
      return epsteer::run(resolve(compare_f));
    }
    const auto eps = epsteer::locate(resolve(locate_f));
    nlohmann::json j = nlohmann::json::array();
    for (const auto& p : eps) j.push_back({p.x, p.y});
    std::cout << j.dump() << "\n";
    return epsteer::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return epsteer::kExitError;
  }
}

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "epsteer/runner.hpp"

using namespace epsteer;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("epsteer_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunConfig config_in(const fs::path& dir, json j = json::object()) {
  j["out"] = dir.string();
  return parse_config(j);
}

}  // namespace

TEST_CASE("empty config gives the default benchmark", "[cli]") {
  const auto c = parse_config(json::object());
  CHECK_FALSE(c.family);
  CHECK(c.loop.kind == LoopKind::Circle);
  CHECK(c.loop.center == ParameterPoint{0.0, 1.0});
  CHECK(c.loop.radius_a == 1.0);
  CHECK(c.loop.n_intervals == 100);
  CHECK(c.p0 == 0.9);
  CHECK(c.method == RunMethod::Stable);
  CHECK(c.directions == std::vector{Direction::CCW});
  CHECK(c.modes == std::vector{Mode::A});
  CHECK(c.ga.seed == 42);
  const auto loop = build_loop(c.loop);
  CHECK(std::abs(loop.points.front().x) < 1e-15);
  CHECK(loop.points.front().y == 0.0);
  CHECK(parse_config(json(nullptr)).p0 == 0.9);
}

TEST_CASE("p0 of one is rejected", "[cli]") {
  try {
    parse_config(json{{"p0", 1.0}});
    FAIL("accepted p0 = 1");
  } catch (const ConfigError& e) {
    CHECK(e.field == "config.p0");
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("P₀ must be less than 1"));
  }
  ConfigOverrides flags;
  flags.p0 = 1.0;
  CHECK_THROWS_AS(parse_config(json::object(), flags), ConfigError);
}

TEST_CASE("flags override file values", "[cli]") {
  const json file = {{"directions", {"ccw"}}, {"p0", 0.8}, {"ga", {{"seed", 5}}}, {"method", "uniform"}};
  ConfigOverrides flags;
  flags.direction = "cw";
  flags.seed = 9;
  const auto c = parse_config(file, flags);
  CHECK(c.directions == std::vector{Direction::CW});
  CHECK(c.ga.seed == 9);
  CHECK(c.p0 == 0.8);  // untouched by flags
  CHECK(c.method == RunMethod::Uniform);
  flags.mode = "A,B";
  flags.method = "optimize";
  const auto d = parse_config(file, flags);
  CHECK(d.modes == std::vector{Mode::A, Mode::B});
  CHECK(d.method == RunMethod::Optimize);
}

TEST_CASE("config errors name the field", "[cli]") {
  auto field_of = [](const json& j) -> std::string {
    try {
      parse_config(j);
    } catch (const ConfigError& e) {
      return e.field;
    }
    return "";
  };
  CHECK(field_of({{"bogus", 1}}) == "config.bogus");
  CHECK(field_of({{"loop", {{"radius", 1.0}}}}) == "config.loop.radius");
  CHECK(field_of({{"ga", {{"population", "many"}}}}) == "config.ga.population");
  CHECK(field_of({{"ga", {{"mutation_rate", 2.0}}}}) == "config.ga");
  CHECK(field_of({{"method", "fastest"}}) == "config.method");
  CHECK(field_of({{"directions", {"up"}}}) == "config.directions[0]");
  CHECK(field_of({{"modes", {"A", "A"}}}) == "config.modes");
  CHECK(field_of({{"loop", {{"n_intervals", 2}}}}) == "config.loop.n_intervals");
  CHECK(field_of({{"purity", 0.0}}) == "config.purity");
  CHECK(field_of({{"family", {{"h0", {{1, 0}, {0, 1}}}}}}) == "config.family.hx");
  CHECK(field_of({{"targets", "both"}}) == "config.targets");
  CHECK(field_of({{"total_time", -1.0}}) == "config.total_time");

  const auto bad = scratch("malformed") / "bad.json";
  fs::create_directories(bad.parent_path());
  std::ofstream(bad) << "{ \"p0\": ";
  CHECK_THROWS_AS(load_config(bad), ConfigError);
  CHECK_THROWS_AS(load_config(bad.parent_path() / "missing.json"), ConfigError);
}

TEST_CASE("effective config round-trips", "[cli][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int rep = 0; rep < 50; ++rep) {
    json j = {{"p0", u(rng)},
              {"purity", u(rng)},
              {"loop", {{"kind", rep % 2 ? "ellipse" : "circle"}, {"radius_a", 0.5 + u(rng)}, {"n_intervals", 20 + rep}}},
              {"ga", {{"seed", rep}, {"mutation_rate", u(rng)}}},
              {"directions", rep % 3 ? json{"ccw", "cw"} : json{"cw"}}};
    if (rep % 4 == 0) j["total_time"] = 10 * u(rng);
    if (rep % 5 == 0)
      j["family"] = {{"h0", {{0, {1, 0.5}}, {1, 0}}}, {"hx", {{1, 0}, {0, -1}}}, {"hy", {{{0, 1}, 0}, {0, {0, -1}}}}};
    const auto c = parse_config(j);
    const json eff = to_json(c);
    CHECK(to_json(parse_config(json::parse(eff.dump()))) == eff);
  }
}

TEST_CASE("stable run writes the default artifacts", "[cli]") {
  const auto dir = scratch("stable");
  std::ostringstream out, err;
  REQUIRE(run(config_in(dir), out, err) == kExitOk);
  for (const char* f : {"trace_ccw_A.csv", "schedule.json", "schedule.csv", "loop.csv", "effective_config.json",
                        "manifest.json", "plot_traces.py"})
    CHECK(fs::exists(dir / f));

  const auto trace = slurp(dir / "trace_ccw_A.csv");
  CHECK(trace.rfind("j,x,y,dt,t_cum,P1,P2,re_omega_bar,im_omega_bar,zeta_A,zeta_B,speed\n", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 102);
  CHECK(slurp(dir / "loop.csv").rfind("j,x,y,C_j\n", 0) == 0);
  CHECK(slurp(dir / "schedule.csv").rfind("j,dt\n", 0) == 0);

  const auto sched = json::parse(slurp(dir / "schedule.json"));
  CHECK(sched.at("method") == "stable");
  CHECK(sched.at("dwells").size() == 100);
  const auto direct = stable_schedule(build_loop(LoopSpec::default_loop()), HamiltonianFamily::builtin(), Mode::A);
  CHECK(sched.at("total_time").get<double>() == direct.schedule.total_time());

  // One summary line naming method, total time, end purities and CI.
  const auto line = out.str();
  CHECK(std::count(line.begin(), line.end(), '\n') == 1);
  for (const char* key : {"method=stable", "total_time=", "zeta_A=", "zeta_B=", "CI:"})
    CHECK_THAT(line, Catch::Matchers::ContainsSubstring(key));
  CHECK(err.str().empty());
}

TEST_CASE("manifest hashes every file and reruns are byte-identical", "[cli]") {
  const auto dir = scratch("rerun");
  json j = {{"method", "optimize"}, {"targets", "nonchiral"}, {"ga", {{"generations", 40}}}};
  const auto cfg = config_in(dir, j);
  std::ostringstream sink;
  REQUIRE(run(cfg, sink, sink) == kExitOk);
  const auto first_manifest = slurp(dir / "manifest.json");
  const auto first_schedule = slurp(dir / "schedule.json");

  const auto manifest = json::parse(first_manifest);
  std::set<std::string> listed;
  for (const auto& f : manifest.at("files")) {
    const std::string name = f.at("name");
    listed.insert(name);
    const auto body = slurp(dir / name);
    CHECK(f.at("sha256") == sha256_hex(body));
    CHECK(f.at("bytes") == body.size());
  }
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "manifest.json") CHECK(listed.count(e.path().filename().string()) == 1);

  REQUIRE(run(cfg, sink, sink) == kExitOk);
  CHECK(slurp(dir / "manifest.json") == first_manifest);
  CHECK(slurp(dir / "schedule.json") == first_schedule);

  // Re-parsing the echoed config reproduces the same run.
  const auto again = load_config(dir / "effective_config.json");
  CHECK(to_json(again) == to_json(cfg));
  REQUIRE(run(again, sink, sink) == kExitOk);
  CHECK(slurp(dir / "manifest.json") == first_manifest);
}

TEST_CASE("sha256 matches known digests", "[cli]") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("non-chiral optimization reports feasible", "[cli]") {
  const auto dir = scratch("nonchiral");
  std::ostringstream out, err;
  REQUIRE(run(config_in(dir, {{"method", "optimize"}, {"targets", "nonchiral"}}), out, err) == kExitOk);
  const auto report = json::parse(slurp(dir / "report.json"));
  CHECK(report.at("feasible") == true);
  CHECK(report.at("seed") == 42);
  CHECK(report.at("history").size() == 201);
  for (const char* label : {"ccw_A_to_B", "cw_A_to_B"}) CHECK(report.at("achieved").at(label).get<double>() >= 0.9);
  CHECK(fs::exists(dir / "trace_ccw_A.csv"));
  CHECK(fs::exists(dir / "trace_cw_A.csv"));
}

TEST_CASE("infeasible optimization exits with 2", "[cli]") {
  // A tiny loop far from both EPs cannot turn mode A into mode B.
  const auto dir = scratch("infeasible");
  std::ostringstream out, err;
  const json j = {{"method", "optimize"},
                  {"targets", "nonchiral"},
                  {"loop", {{"center", {1.5, 0.5}}, {"radius_a", 0.01}}},
                  {"ga", {{"generations", 20}}}};
  CHECK(run(config_in(dir, j), out, err) == kExitInfeasible);
  const auto report = json::parse(slurp(dir / "report.json"));
  CHECK(report.at("feasible") == false);
  CHECK_THAT(out.str(), Catch::Matchers::ContainsSubstring("feasible=false"));
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("errors exit with 1", "[cli]") {
  std::ostringstream out, err;
  // Circle whose first point is the exceptional point (0, 1).
  const json j = {{"loop", {{"center", {0.0, 0.5}}, {"radius_a", 0.5}, {"start_angle", std::numbers::pi / 2}}}};
  const auto dir = scratch("through_ep");
  CHECK(run(config_in(dir, j), out, err) == kExitError);
  CHECK_THAT(err.str(), Catch::Matchers::ContainsSubstring("exceptional point"));
  CHECK(out.str().empty());
  CHECK_FALSE(fs::exists(dir));  // nothing is written before computation succeeds
}

TEST_CASE("sheets and compare outputs", "[cli]") {
  std::ostringstream sink;
  const auto sdir = scratch("sheets");
  REQUIRE(run(config_in(sdir, {{"method", "sheets"}, {"sheets", {{"nx", 10}, {"ny", 6}}}}), sink, sink) == kExitOk);
  const auto sheets = slurp(sdir / "sheets.csv");
  CHECK(sheets.rfind("x,y,re_omega_1,im_omega_1,re_omega_2,im_omega_2\n", 0) == 0);
  CHECK(std::count(sheets.begin(), sheets.end(), '\n') == 61);

  const auto cdir = scratch("compare");
  REQUIRE(run(config_in(cdir, {{"method", "compare"}, {"ga", {{"generations", 30}}}}), sink, sink) == kExitOk);
  const auto csv = slurp(cdir / "comparison.csv");
  CHECK(csv.rfind("method,input_mode,direction,zeta_A_end,zeta_B_end,total_time,CI\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  const auto reps = json::parse(slurp(cdir / "comparison.json")).get<std::vector<MethodReport>>();
  REQUIRE(reps.size() == 3);
  CHECK(reps[0].method == ScheduleMethod::Optimized);
}

TEST_CASE("locate finds the built-in exceptional points", "[cli]") {
  auto eps = locate(parse_config(json::object()));
  REQUIRE(eps.size() == 2);
  std::sort(eps.begin(), eps.end(), [](auto& a, auto& b) { return a.y < b.y; });
  CHECK(std::abs(eps[0].x) < 1e-8);
  CHECK(std::abs(eps[0].y + 1) < 1e-8);
  CHECK(std::abs(eps[1].y - 1) < 1e-8);
}

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "epsteer/metrics.hpp"

using namespace epsteer;

namespace {

const ParameterLoop& default_loop() {
  static const auto loop = build_loop(LoopSpec::default_loop());
  return loop;
}

const OptimizationProblem& chiral_problem() {
  static const OptimizationProblem p(HamiltonianFamily::builtin(), default_loop(), ConstraintSet::chiral(0.9));
  return p;
}

// CCW A->B only: the scenario every method can serve.
const OptimizationProblem& ccw_conversion() {
  static const auto p = chiral_problem().with_constraints(
      ConstraintSet({Direction::CCW}, {Mode::A}, {{{Direction::CCW, Mode::A}, {Mode::B, 0.9}}}));
  return p;
}

EvolutionTrace fake_trace(Direction d, Mode m, double za) {
  EvolutionTrace t;
  t.direction = d;
  t.mode = m;
  t.dwells = {0.0};
  TraceSample s0, s1;
  s1.j = 1;
  s1.zeta_A = za;
  s1.zeta_B = 1.0 - za;
  t.samples = {s0, s1};
  return t;
}

}  // namespace

TEST_CASE("chiral index examples", "[metrics]") {
  CHECK(chiral_index(0.0, 1.0, 1.0, 0.0) == 1.0);
  CHECK(chiral_index(0.5, 0.5, 0.5, 0.5) == 0.5);
  CHECK(std::abs(chiral_index(0.1, 0.9, 0.8, 0.2) - 0.85) < 1e-15);
  CHECK(chiral_index(fake_trace(Direction::CCW, Mode::A, 0.1), fake_trace(Direction::CW, Mode::A, 0.8)) ==
        chiral_index(0.1, 0.9, 0.8, 0.2));
}

TEST_CASE("chiral index preconditions", "[metrics]") {
  auto ccw = fake_trace(Direction::CCW, Mode::A, 0.1);
  auto cw = fake_trace(Direction::CW, Mode::A, 0.8);
  CHECK_THROWS_AS(chiral_index(cw, ccw), InputError);
  CHECK_THROWS_AS(chiral_index(ccw, fake_trace(Direction::CW, Mode::B, 0.8)), InputError);
  auto cut = cw;
  cut.samples.pop_back();
  CHECK_THROWS_AS(chiral_index(ccw, cut), InputError);
}

TEST_CASE("chiral index lies in [0.5, 1]", "[metrics][property]") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    const double ci = chiral_index(a, 1 - a, b, 1 - b);
    REQUIRE(ci >= 0.5);
    REQUIRE(ci <= 1.0);
  }
  // Real traces under random sparse schedules.
  std::bernoulli_distribution on(0.1);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> d(100, 0.0);
    for (auto& v : d) v = on(rng) ? 2 * u(rng) : 0.0;
    const auto r = evaluate_schedule(chiral_problem(), Schedule(d, ScheduleMethod::Optimized));
    for (const auto& [m, ci] : r.ci) {
      REQUIRE(ci >= 0.5);
      REQUIRE(ci <= 1.0);
    }
  }
}

TEST_CASE("uniform time to purity is monotone", "[metrics]") {
  const auto t = time_to_purity(uniform_runner(ccw_conversion()), {0.80, 0.85, 0.90, 0.95});
  REQUIRE(t.size() == 4);
  for (size_t i = 0; i < t.size(); ++i) {
    CHECK(std::isfinite(t[i].second));
    if (i) CHECK(t[i].second >= t[i - 1].second - 1e-3);
  }
  // Each time is the first crossing: a bit less time misses the level.
  for (const auto& [p, time] : t) {
    const auto z = scenario_purities(std::vector<double>(100, time / 100), ccw_conversion());
    CHECK(z[0] >= p);
    const auto under = scenario_purities(std::vector<double>(100, 0.999 * time / 100), ccw_conversion());
    CHECK(under[0] < p);
  }
}

TEST_CASE("time to purity reports unattainable levels as infinity", "[metrics]") {
  const MethodRunner never = [](double) { return kInf; };
  const auto t = time_to_purity(never, {0.8, 0.9});
  CHECK(t[0].second == kInf);
  CHECK(t[1].second == kInf);
  CHECK_THROWS_AS(time_to_purity(never, {0.0}), InputError);
  CHECK_THROWS_AS(time_to_purity(never, {1.0}), InputError);
}

TEST_CASE("time to purity keeps input order and the monotone envelope", "[metrics]") {
  // A runner that is non-monotone on its own: 0.85 looks harder than 0.9.
  const MethodRunner bumpy = [](double p) { return p == 0.85 ? 5.0 : 10 * p; };
  const auto t = time_to_purity(bumpy, {0.9, 0.85, 0.8});
  CHECK(t[0] == std::pair{0.9, 9.0});
  CHECK(t[1] == std::pair{0.85, 5.0});
  CHECK(t[2] == std::pair{0.8, 5.0});
}

TEST_CASE("stable time search", "[metrics]") {
  const auto s = stable_time_for(ccw_conversion(), Direction::CCW, Mode::A);
  REQUIRE(std::isfinite(s.time));
  CHECK(s.p0 < 0.9);  // the stable end purity overshoots p0
  SchedulerConfig cfg;
  cfg.p0 = s.p0;
  const auto r = stable_schedule(chiral_problem().path(Direction::CCW), Mode::A, cfg);
  CHECK(r.trace.end().zeta_B >= 0.9);
  CHECK(std::abs(r.schedule.total_time() - s.time) < 1e-12);
}

TEST_CASE("compare_methods on the chiral benchmark", "[metrics]") {
  const auto reps =
      compare_methods(chiral_problem(), {ScheduleMethod::Optimized, ScheduleMethod::Stable, ScheduleMethod::Uniform});
  REQUIRE(reps.size() == 3);
  const auto& opt = reps[0];
  const auto& stable = reps[1];
  const auto& uni = reps[2];
  CHECK(opt.method == ScheduleMethod::Optimized);
  CHECK(std::abs(uni.total_time - opt.total_time) < 1e-12);  // equal budget
  CHECK(opt.ends.size() == 4);

  CHECK(std::abs(opt.ci.at(Mode::A) - opt.ci.at(Mode::B)) <= 0.02);
  CHECK(stable.ci.at(Mode::A) >= uni.ci.at(Mode::A));
  for (Mode m : {Mode::A, Mode::B}) {
    CHECK(opt.ci.at(m) >= stable.ci.at(m));
    CHECK(stable.ci.at(m) >= uni.ci.at(m));
  }
  for (const auto& r : reps)
    for (const auto& e : r.ends) {
      CHECK(e.zeta_A >= 0.0);
      CHECK(e.zeta_B <= 1.0);
    }
}

TEST_CASE("method report JSON round trip", "[metrics]") {
  MethodReport r;
  r.method = ScheduleMethod::Stable;
  r.total_time = 2.4074822159310136;
  r.ends = {{Mode::A, Direction::CCW, 0.06817, 0.93183}, {Mode::A, Direction::CW, 1.0 / 3.0, 2.0 / 3.0}};
  r.ci = {{Mode::A, 0.1 + 0.2}};
  r.time_to_purity = {{0.8, 1.39}, {0.99, kInf}};
  r.dwells = {0.0, 1e-300, 0.7};
  const std::string text = nlohmann::json(r).dump();
  const auto back = nlohmann::json::parse(text).get<MethodReport>();
  CHECK(back == r);
  CHECK(nlohmann::json(back).dump() == text);
}

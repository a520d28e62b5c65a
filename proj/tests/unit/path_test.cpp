#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "epsteer/path.hpp"

using namespace epsteer;

TEST_CASE("default loop geometry", "[path]") {
  const auto loop = build_loop(LoopSpec::default_loop());
  REQUIRE(loop.points.size() == 101);
  CHECK(loop.points.front() == loop.points.back());
  CHECK(std::abs(loop.points[0].x) < 1e-15);
  CHECK(std::abs(loop.points[0].y) < 1e-15);
  CHECK(loop.arc.front() == 0.0);
  CHECK(loop.arc.back() == 1.0);
  CHECK(std::abs(loop.arc[50] - 0.5) < 1e-12);
  for (size_t j = 1; j < loop.arc.size(); ++j) CHECK(loop.arc[j] >= loop.arc[j - 1]);
}

TEST_CASE("arc steps sum to one", "[path][property]") {
  for (int n : {2, 3, 17, 100, 333}) {
    LoopSpec spec;
    spec.kind = LoopKind::Ellipse;
    spec.radius_a = 0.7;
    spec.radius_b = 1.9;
    spec.n_intervals = n;
    const auto loop = build_loop(spec);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += loop.arc_step(j);
    CHECK(std::abs(sum - 1.0) < 1e-12);
    // dC^2 = |dx|^2 / rho
    for (int j = 0; j < n; ++j) {
      const double d = distance(loop.points[j], loop.points[j + 1]);
      CHECK(std::abs(loop.arc_step(j) - d / std::sqrt(loop.rho)) < 1e-12);
    }
  }
}

TEST_CASE("square polyline has rho 16", "[path]") {
  LoopSpec spec;
  spec.kind = LoopKind::Polyline;
  spec.polyline = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}};
  spec.n_intervals = 100;
  const auto loop = build_loop(spec);
  CHECK(std::abs(loop.rho - 16.0) < 1e-12);
  CHECK(loop.points.size() == 101);
  CHECK(loop.points.front() == loop.points.back());
  CHECK(std::abs(loop.arc[25] - 0.25) < 1e-12);
}

TEST_CASE("build_loop error paths", "[path]") {
  LoopSpec open;
  open.kind = LoopKind::Polyline;
  open.polyline = {{0, 0}, {1, 0}, {1, 1}};
  CHECK_THROWS_AS(build_loop(open), InputError);

  LoopSpec two = open;
  two.polyline = {{0, 0}, {1, 0}, {0, 0}};
  CHECK_THROWS_AS(build_loop(two), InputError);

  LoopSpec zero;
  zero.radius_a = 0.0;
  CHECK_THROWS_AS(build_loop(zero), InputError);

  LoopSpec few;
  few.n_intervals = 1;
  CHECK_THROWS_AS(build_loop(few), InputError);
}

TEST_CASE("orient", "[path]") {
  const auto loop = build_loop(LoopSpec::default_loop());
  const auto ccw = orient(loop, Direction::CCW);
  CHECK(ccw.points == loop.points);

  const auto cw = orient(loop, Direction::CW);
  CHECK(cw.direction == Direction::CW);
  for (int j = 0; j <= 100; ++j) CHECK(cw.points[j] == loop.points[100 - j]);
  CHECK(cw.points.front() == loop.points.front());
  CHECK(cw.arc.front() == 0.0);
  CHECK(cw.arc.back() == 1.0);

  const auto back = orient(cw, Direction::CW);
  CHECK(back.points == loop.points);
  CHECK(back.direction == Direction::CCW);
}

TEST_CASE("min_ep_distance", "[path]") {
  const auto loop = build_loop(LoopSpec::default_loop());
  const std::vector<ParameterPoint> ep{{0, 1}};
  CHECK(std::abs(min_ep_distance(loop, ep) - 1.0) < 1e-12);
  const std::vector<ParameterPoint> far{{50, 50}};
  CHECK(min_ep_distance(loop, far) > 60.0);
  CHECK(min_ep_distance(loop, {}) == kInf);
}

TEST_CASE("winding_number", "[path]") {
  const auto loop = build_loop(LoopSpec::default_loop());
  CHECK(winding_number(loop, {0, 1}) == 1);
  CHECK(winding_number(orient(loop, Direction::CW), {0, 1}) == -1);
  CHECK(winding_number(loop, {0, -1}) == 0);

  LoopSpec small;
  small.center = {3, 3};
  small.radius_a = 0.1;
  CHECK(winding_number(build_loop(small), {0, 1}) == 0);

  CHECK_THROWS_AS(winding_number(loop, {0, 0}), InputError);
}

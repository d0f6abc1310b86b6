#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "lidarnav/gridworld.hpp"
#include "oracles.hpp"

using namespace lidarnav;
constexpr double kPi = std::numbers::pi;

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const double a = wrap_angle(u(rng));
    CHECK(a > -kPi);
    CHECK(a <= kPi);
  }
}

TEST_CASE("raycast: empty room hits the boundary") {
  OccupancyGrid g(100, 100, 0.1);
  CHECK(raycast(g, {5, 5}, 0.0, 30.0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(raycast(g, {5, 5}, kPi / 2, 30.0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(raycast(g, {5, 5}, kPi, 30.0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(raycast(g, {5, 5}, kPi / 4, 30.0) == doctest::Approx(5.0 * std::sqrt(2.0)).epsilon(1e-9));
  CHECK(raycast(g, {5, 5}, 0.0, 2.5) == doctest::Approx(2.5));
}

TEST_CASE("raycast: wall column at x = 3 m") {
  OccupancyGrid g(100, 100, 0.1);
  for (int y = 0; y < 100; ++y) g.set_occupied(30, y, true);
  CHECK(raycast(g, {1.0, 1.0}, 0.0, 30.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("raycast: invalid origins") {
  OccupancyGrid g(10, 10, 0.1);
  g.set_occupied(2, 2, true);
  CHECK_THROWS_WITH(raycast(g, {0.25, 0.25}, 0.0, 5.0), "invalid ray origin");
  CHECK_THROWS_WITH(raycast(g, {-0.1, 0.5}, 0.0, 5.0), "invalid ray origin");
  CHECK_THROWS_WITH(raycast(g, {0.5, 1.5}, 0.0, 5.0), "invalid ray origin");
}

TEST_CASE("raycast agrees with brute-force oracles and is monotone in max_range") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  std::uniform_real_distribution<double> range(0.5, 15.0);
  int worst_cases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const OccupancyGrid g = oracle::random_grid(rng, 0.12);
    const Vec2 o = oracle::random_free_point(g, rng);
    const double a = ang(rng);
    const double r = range(rng);
    const double got = raycast(g, o, a, r);
    const double want = oracle::slab_ray(g, o, a, r);
    CHECK(got >= 0.0);
    CHECK(got <= r);
    if (std::abs(got - want) > 1e-9) ++worst_cases;
    // marching can only skip corner clips, so it never reports a nearer hit
    CHECK(oracle::march_ray(g, o, a, r) >= got - 1e-9);
    CHECK(raycast(g, o, a, r * 1.5) >= got);
  }
  CHECK(worst_cases == 0);
}

TEST_CASE("footprint_min_range") {
  SUBCASE("circle with centred mount is the radius at every angle") {
    RobotBody body{Circle{0.2}, {0, 0}};
    for (double a = -kPi; a <= kPi; a += 0.1) CHECK(footprint_min_range(body, a) == 0.2);
  }
  SUBCASE("rectangle matches segment intersection") {
    const Rectangle rect{0.455, 0.381};
    for (Vec2 mount : {Vec2{0, 0.1}, Vec2{0.1, 0}, Vec2{-0.05, 0.12}}) {
      RobotBody body{rect, mount};
      body.validate();
      for (double a = -kPi; a < kPi; a += 0.013) {
        CHECK(footprint_min_range(body, a) ==
              doctest::Approx(oracle::ray_rectangle(mount, a, rect.length, rect.width)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("rectangle, perpendicular beams") {
    RobotBody body{Rectangle{0.455, 0.381}, {0, 0.1}};
    CHECK(footprint_min_range(body, 0.0) == doctest::Approx(0.2275));
    CHECK(footprint_min_range(body, kPi / 2) == doctest::Approx(0.1905 - 0.1));
    CHECK(footprint_min_range(body, -kPi / 2) == doctest::Approx(0.1905 + 0.1));
  }
  SUBCASE("mount outside footprint is rejected") {
    RobotBody body{Circle{0.2}, {0.3, 0}};
    CHECK_THROWS(body.validate());
  }
}

TEST_CASE("lidar beam angles") {
  LidarSpec spec{1.5 * kPi, 1080, 30.0};
  const auto a = spec.beam_angles();
  REQUIRE(a.size() == 1080);
  CHECK(a.front() == doctest::Approx(-0.75 * kPi));
  CHECK(a.back() == doctest::Approx(0.75 * kPi));
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] > a[i - 1]);
  CHECK_THROWS(LidarSpec{kPi, 1, 5.0}.beam_angles());
}

TEST_CASE("scan") {
  OccupancyGrid g(100, 100, 0.1);
  const RobotBody body{Circle{0.2}, {0, 0}};
  const LidarSpec spec{2 * kPi, 8, 30.0};
  SUBCASE("empty room: every beam reaches the boundary") {
    const Pose pose{5, 5, 0};
    const auto f = scan(g, pose, body, spec);
    const auto angles = spec.beam_angles();
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(f.ranges[i] == doctest::Approx(raycast(g, {5, 5}, angles[i], 30.0)));
      CHECK(f.d_min[i] == 0.2);
      CHECK(f.d_max[i] == 30.0);
    }
  }
  SUBCASE("obstacle ahead only affects the forward beam") {
    LidarSpec s{1.5 * kPi, 3, 30.0};  // beams at -135, 0, +135 degrees
    for (int y = 0; y < 100; ++y) g.set_occupied(60, y, true);
    const auto f = scan(g, {5.0, 5.0, 0.0}, body, s);
    CHECK(f.ranges[1] == doctest::Approx(1.0));
    const auto clear = scan(OccupancyGrid(100, 100, 0.1), {5.0, 5.0, 0.0}, body, s);
    CHECK(f.ranges[0] == doctest::Approx(clear.ranges[0]));
    CHECK(f.ranges[2] == doctest::Approx(clear.ranges[2]));
  }
  SUBCASE("per-beam equality with clamped raycasts") {
    std::mt19937_64 rng(5);
    const RobotBody rect{Rectangle{0.455, 0.381}, {0.1, 0}};
    const LidarSpec s{1.3 * kPi, 64, 3.0};
    for (int t = 0; t < 50; ++t) {
      OccupancyGrid rg = oracle::random_grid(rng, 0.05);
      const Vec2 p = oracle::random_free_point(rg, rng);
      const Pose pose{p.x, p.y, std::uniform_real_distribution<double>(-kPi, kPi)(rng)};
      const Vec2 mount = pose.to_world(rect.lidar_offset);
      if (!rg.contains(mount) || rg.occupied_at(mount)) continue;
      const auto f = scan(rg, pose, rect, s);
      const auto angles = s.beam_angles();
      for (std::size_t i = 0; i < f.size(); ++i) {
        const double lo = footprint_min_range(rect, angles[i]);
        const double want = std::clamp(raycast(rg, mount, pose.theta + angles[i], 3.0), lo, 3.0);
        CHECK(f.ranges[i] == want);
        CHECK(f.ranges[i] >= f.d_min[i]);
        CHECK(f.ranges[i] <= f.d_max[i]);
      }
    }
  }
}

TEST_CASE("step_kinematics") {
  DiffDriveState s;
  s.limits = {-0.5, 0.5, kPi / 2};
  SUBCASE("straight") {
    const auto n = step_kinematics(s, 0.5, 0.0, 0.2);
    CHECK(n.pose.x == doctest::Approx(0.1));
    CHECK(n.pose.y == 0.0);
    CHECK(n.pose.theta == 0.0);
  }
  SUBCASE("turn in place") {
    const auto n = step_kinematics(s, 0.0, kPi / 2, 0.2);
    CHECK(n.pose.theta == doctest::Approx(kPi / 10));
    CHECK(n.pose.x == 0.0);
    CHECK(n.pose.y == 0.0);
  }
  SUBCASE("clamped command") {
    const auto n = step_kinematics(s, 1.0, 0.0, 0.2);
    CHECK(n.v == 0.5);
    CHECK(n.pose.x == doctest::Approx(0.1));
    const auto w = step_kinematics(s, 0.0, -7.0, 0.2);
    CHECK(w.omega == -kPi / 2);
  }
  SUBCASE("zero command is the identity on pose") {
    s.pose = {1.3, -2.0, 2.5};
    const auto n = step_kinematics(s, 0.0, 0.0, 0.2);
    CHECK(n.pose.x == s.pose.x);
    CHECK(n.pose.y == s.pose.y);
    CHECK(n.pose.theta == s.pose.theta);
  }
  SUBCASE("non-positive dt") { CHECK_THROWS(step_kinematics(s, 0.1, 0.1, 0.0)); }
}

TEST_CASE("collision_check fixtures") {
  OccupancyGrid g(100, 100, 0.1);
  g.fill_box({6.0, 0.0}, {7.0, 10.0});  // occupied x in [6, 7)
  const RobotBody body{Circle{0.2}, {0, 0}};
  CHECK_FALSE(collision_check(g, {5.0 - 0.0, 5.0, 0.0}, body));
  CHECK(collision_check(g, {5.85, 5.0, 0.0}, body));
  CHECK_FALSE(collision_check(g, {5.79, 5.0, 0.0}, body));
  // near the map boundary
  CHECK(collision_check(g, {0.1, 5.0, 0.0}, body));
  const RobotBody rect{Rectangle{0.455, 0.381}, {0.1, 0}};
  CHECK_FALSE(collision_check(g, {5.0, 5.0, 0.0}, rect));
  CHECK(collision_check(g, {5.8, 5.0, 0.0}, rect));
  CHECK_FALSE(collision_check(g, {5.8, 5.0, kPi / 2}, rect));
}

TEST_CASE("collision_check matches dense sampling and is monotone in obstacles") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  int mismatches = 0;
  for (int trial = 0; trial < 400; ++trial) {
    OccupancyGrid g = oracle::random_grid(rng, 0.04);
    std::uniform_real_distribution<double> ux(g.origin().x, g.origin().x + g.width_m());
    std::uniform_real_distribution<double> uy(g.origin().y, g.origin().y + g.height_m());
    const Pose pose{ux(rng), uy(rng), ang(rng)};
    const RobotBody body = trial % 2 ? RobotBody{Circle{0.2}, {0, 0}} : RobotBody{Rectangle{0.455, 0.381}, {0.1, 0}};
    const bool got = collision_check(g, pose, body);
    if (got != oracle::dense_collision(g, pose, body)) ++mismatches;
    if (got) {
      g.set_occupied(std::uniform_int_distribution<int>(0, g.width() - 1)(rng),
                     std::uniform_int_distribution<int>(0, g.height() - 1)(rng), true);
      CHECK(collision_check(g, pose, body));
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("map files") {
  SUBCASE("round trip") {
    std::istringstream in("resolution 0.5\nwidth 4\nheight 3\n#...\n..#.\n....\n");
    const auto g = parse_map(in);
    CHECK(g.width() == 4);
    CHECK(g.height() == 3);
    CHECK(g.resolution() == 0.5);
    CHECK(g.occupied(0, 2));  // first row is the top
    CHECK(g.occupied(2, 1));
    CHECK_FALSE(g.occupied(0, 0));
    CHECK(g.occupied_count() == 2);
    std::ostringstream out;
    write_map(out, g);
    std::istringstream again(out.str());
    CHECK(parse_map(again).cells() == g.cells());
  }
  SUBCASE("ragged rows are rejected") {
    std::istringstream in("resolution 0.5\nwidth 4\nheight 2\n....\n...\n");
    CHECK_THROWS_WITH(parse_map(in), "ragged row");
  }
  SUBCASE("missing header") {
    std::istringstream in("width 4\nheight 1\n....\n");
    CHECK_THROWS(parse_map(in));
  }
}

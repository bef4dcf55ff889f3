#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qdplan/errors.hpp"
#include "qdplan/maze.hpp"
#include "qdplan/rng.hpp"
#include "qdplan/sim.hpp"

using namespace qdplan;

TEST_SUITE_BEGIN("sim");

TEST_CASE("params validate") {
  SimParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.max_speed() == 2.0);
  p.dt = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.lin_damping = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("iterated steps match the closed-form trajectory") {
  MazeSpec maze = builtin_maze("open");
  SimParams params;
  test::FreeFlightState f0;
  f0.position = {16.0, 14.0};
  f0.velocity = {0.3, -0.7};
  f0.heading = 0.2;
  f0.omega = 0.5;

  SimState s;
  s.position = f0.position;
  s.velocity = f0.velocity;
  s.heading = f0.heading;
  s.omega = f0.omega;

  const Vec2 action{0.6, -0.4};
  for (int n : {1, 7, 50}) {
    SimState it = s;
    for (int k = 0; k < n; ++k) it = step(it, action, maze, params);
    test::FreeFlightState ref = test::free_flight(f0, action, n, params);
    CHECK(std::abs(it.position.x - ref.position.x) < 1e-9);
    CHECK(std::abs(it.position.y - ref.position.y) < 1e-9);
    CHECK(std::abs(it.velocity.x - ref.velocity.x) < 1e-9);
    CHECK(std::abs(it.velocity.y - ref.velocity.y) < 1e-9);
    CHECK(std::abs(it.heading - ref.heading) < 1e-9);
    CHECK(std::abs(it.omega - ref.omega) < 1e-9);
    CHECK(it.step == n);
  }
}

TEST_CASE("velocity saturates at force_scale/(mass*lin_damping)") {
  MazeSpec maze = builtin_maze("open");
  // heavy damping: terminal speed is reached long before any wall is
  SimParams params;
  params.lin_damping = 20.0;
  SimState s = initial_state(maze);
  for (int k = 0; k < 400; ++k) s = step(s, {1.0, 0.0}, maze, params);
  CHECK(s.velocity.x == doctest::Approx(params.max_speed()).epsilon(1e-12));
  CHECK(s.velocity.y == 0.0);

  // with defaults the approach is monotone from below
  SimParams def;
  SimState t = initial_state(maze);
  double prev = 0.0;
  for (int k = 0; k < 100; ++k) {
    t = step(t, {1.0, 0.0}, maze, def);
    CHECK(t.velocity.x > prev);
    CHECK(t.velocity.x < def.max_speed());
    prev = t.velocity.x;
  }
}

TEST_CASE("actions clamp to the unit box") {
  MazeSpec maze = builtin_maze("open");
  SimParams params;
  SimState a = step(initial_state(maze), {5.0, 0.0}, maze, params);
  SimState b = step(initial_state(maze), {1.0, 0.0}, maze, params);
  CHECK(a == b);
}

TEST_CASE("reward matches the worked example to 1e-12") {
  RewardCoeffs c;
  // p_rel=(3,4) (d=5), a=(1,1), rot=(0.2,0.1), omega=2, alive
  const double r = reward_eq({3.0, 4.0}, {1.0, 1.0}, 0.2, 0.1, 2.0, c, true);
  CHECK(std::abs(r - (-24.235)) < 1e-12);
  // alive=false drops only the bonus
  const double r2 = reward_eq({3.0, 4.0}, {1.0, 1.0}, 0.2, 0.1, 2.0, c, false);
  CHECK(std::abs(r2 - (-25.235)) < 1e-12);
}

TEST_CASE("goal term switches branch continuously at d = 1") {
  RewardCoeffs c;
  Rng rng(123);
  for (int k = 0; k < 1000; ++k) {
    const double ang = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 unit{std::cos(ang), std::sin(ang)};
    const Vec2 a{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double w = rng.uniform(-3.0, 3.0);
    // exactly on the switch the two branches agree: |p|^2 == |p| at 1
    const double at = reward_eq(unit, a, 0.0, 0.0, w, c, true);
    const double just_out = reward_eq(unit * (1.0 + 1e-9), a, 0.0, 0.0, w, c, true);
    const double just_in = reward_eq(unit * (1.0 - 1e-9), a, 0.0, 0.0, w, c, true);
    CHECK(std::abs(just_out - at) < 1e-7);
    CHECK(std::abs(just_in - at) < 1e-7);
  }
}

TEST_CASE("reward coefficient signs are enforced") {
  RewardCoeffs c;
  CHECK_NOTHROW(c.validate());
  c.c_g = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.c_alive = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("rotation terms: none vs heading-excursion mode") {
  SimParams p;
  SimState s;
  s.heading = 1.0;
  auto none = rotation_terms(s, 0.25, p);
  CHECK(none[0] == 0.0);
  CHECK(none[1] == 0.0);
  p.rotation_penalty = RotationPenalty::kHeadingExcursion;
  auto exc = rotation_terms(s, 0.25, p);
  CHECK(exc[0] == doctest::Approx(0.75));
  CHECK(exc[1] == 0.0);
}

TEST_CASE("observation packs goal offset plus proprioception") {
  SimState s;
  s.position = {2.0, 3.0};
  s.heading = 0.5;
  s.velocity = {0.1, -0.2};
  s.omega = 0.7;
  GoalObservation o = observe(s, {5.0, 7.0});
  CHECK(o.p_rel.x == 3.0);
  CHECK(o.p_rel.y == 4.0);
  CHECK(o.base[0] == doctest::Approx(std::sin(0.5)));
  CHECK(o.base[1] == doctest::Approx(std::cos(0.5)));
  CHECK(o.base[2] == 0.1);
  CHECK(o.base[3] == -0.2);
  CHECK(o.base[4] == 0.7);
  auto flat = o.flat();
  CHECK(flat.size() == 7);
  CHECK(flat[0] == 3.0);
  CHECK(o.velocity().y == -0.2);
}

TEST_CASE("collision: head-on into a wall parks on the face with zeroed normal velocity") {
  MazeSpec maze = builtin_maze("trap2d");
  SimParams params;
  SimState s;
  s.position = {12.0, 16.5};  // inside the cavity, left of start
  for (int k = 0; k < 200; ++k) s = step(s, {-1.0, 0.0}, maze, params);
  // back wall's right face is at x = 11.25
  CHECK(s.position.x == 11.25);
  CHECK(s.velocity.x == 0.0);
  CHECK(maze.point_free(s.position));
}

TEST_CASE("collision: sliding along a wall keeps the tangential component") {
  MazeSpec maze = builtin_maze("trap2d");
  SimParams params;
  SimState s;
  s.position = {12.0, 16.0};
  for (int k = 0; k < 40; ++k) s = step(s, {-1.0, 1.0}, maze, params);
  CHECK(s.position.x == 11.25);    // pinned to the face
  CHECK(s.position.y > 16.0);      // but still slid upward
  CHECK(s.velocity.y > 0.0);
}

TEST_CASE("arena clamp stops escape at the boundary") {
  MazeSpec maze = builtin_maze("open");
  SimParams params;
  SimState s = initial_state(maze);
  for (int k = 0; k < 600; ++k) s = step(s, {1.0, -1.0}, maze, params);
  CHECK(s.position.x == 32.0);
  CHECK(s.position.y == 0.0);
  CHECK(s.velocity.x == 0.0);
  CHECK(s.velocity.y == 0.0);
}

TEST_CASE("collision fuzz: never strictly inside an obstacle, never out of bounds") {
  for (const char* name : {"trap2d", "hardmaze2d"}) {
    MazeSpec maze = builtin_maze(name);
    SimParams params;
    Rng rng(mix64(2024, std::string(name) == "trap2d" ? 0 : 1));
    SimState s = initial_state(maze);
    Vec2 a;
    for (int k = 0; k < 120000; ++k) {
      if (k % 7 == 0) a = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
      s = step(s, a, maze, params);
      REQUIRE(maze.in_bounds(s.position));
      for (const Rect& r : maze.obstacles) REQUIRE_FALSE(r.contains_strict(s.position));
    }
  }
}

TEST_CASE("stepping is deterministic") {
  MazeSpec maze = builtin_maze("hardmaze2d");
  SimParams params;
  auto run = [&] {
    SimState s = initial_state(maze);
    Rng rng(5);
    for (int k = 0; k < 5000; ++k)
      s = step(s, {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}, maze, params);
    return s;
  };
  CHECK(run() == run());
}

TEST_SUITE_END();

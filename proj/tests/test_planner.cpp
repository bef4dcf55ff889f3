#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "oracles.hpp"
#include "qdplan/archive.hpp"
#include "qdplan/errors.hpp"
#include "qdplan/maze.hpp"
#include "qdplan/planner.hpp"
#include "qdplan/policy.hpp"
#include "qdplan/rng.hpp"
#include "qdplan/rollout.hpp"
#include "qdplan/sim.hpp"

using namespace qdplan;

namespace {

const ArchiveBounds kUnit3{0.0, 3.0, 0.0, 3.0};

// A validator that teleports: every admitted edge arrives exactly at the head
// cell's center. pass decides admission per directed edge.
EdgeValidator stub_validator(int nx, int ny, const ArchiveBounds& bounds,
                             const std::function<bool(CellIndex, CellIndex)>& pass) {
  return [=](CellIndex from, CellIndex to, const SimState&) {
    EdgeOutcome out;
    out.ok = pass(from, to);
    out.steps_used = 1;
    out.arrival.position = test::ref_cell_center(to.i, to.j, nx, ny, bounds);
    return out;
  };
}

SimState state_at(Vec2 p) {
  SimState s;
  s.position = p;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("planner");

TEST_CASE("config validation") {
  PlannerConfig c;
  CHECK_NOTHROW(c.validate());
  c.eps = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_steps_per_edge = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("1x1 grid: the source is the whole plan") {
  PlannerConfig c;
  auto validator = stub_validator(1, 1, {0.0, 1.0, 0.0, 1.0},
                                  [](CellIndex, CellIndex) { return true; });
  PlanTree t = plan_with_validator(1, 1, {0.0, 1.0, 0.0, 1.0}, {0, 0, true},
                                   state_at({0.5, 0.5}), validator, c);
  CHECK(t.settled_count() == 1);
  CHECK(t.cost[0] == 0.0);
  CHECK(t.edge_rollout_count == 0);
  CHECK(coverage_of(t) == 1.0);
}

TEST_CASE("3x3 all-pass: corner-to-corner costs 2*sqrt(2), all nine settle") {
  PlannerConfig c;
  auto validator =
      stub_validator(3, 3, kUnit3, [](CellIndex, CellIndex) { return true; });
  PlanTree t = plan_with_validator(3, 3, kUnit3, {0, 0, true}, state_at({0.5, 0.5}),
                                   validator, c);
  CHECK(t.settled_count() == 9);
  CHECK(coverage_of(t) == 1.0);
  CHECK(t.cost[t.idx(2, 2)] == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(t.cost[t.idx(1, 1)] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(t.cost[t.idx(2, 0)] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(t.cost[t.idx(0, 0)] == 0.0);
}

TEST_CASE("3x3 with the center cell unreachable: detour costs 2 + sqrt(2)") {
  PlannerConfig c;
  auto validator = stub_validator(3, 3, kUnit3, [](CellIndex, CellIndex to) {
    return !(to.i == 1 && to.j == 1);  // nothing may enter the center
  });
  PlanTree t = plan_with_validator(3, 3, kUnit3, {0, 0, true}, state_at({0.5, 0.5}),
                                   validator, c);
  CHECK(t.settled_count() == 8);
  CHECK(coverage_of(t) == doctest::Approx(8.0 / 9.0));
  CHECK(t.status[t.idx(1, 1)] == CellStatus::kUnreachable);
  CHECK(t.cost[t.idx(1, 1)] == kInfCost);
  // around the blocked center: one straight plus one diagonal
  CHECK(t.cost[t.idx(2, 2)] == doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("agrees exactly with scan dijkstra on random subgraphs") {
  Rng rng(2026);
  int grids_with_unreachable = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int nx = 2 + static_cast<int>(rng.uniform_int(9));  // 2..10
    const int ny = 2 + static_cast<int>(rng.uniform_int(9));
    const ArchiveBounds bounds{0.0, static_cast<double>(nx), 0.0, static_cast<double>(ny)};
    const double pass_rate = 0.4 + 0.5 * rng.uniform();

    // deterministic per-edge admission, same for both algorithms
    const std::uint64_t salt = rng.split(trial).seed() ^ 0x9e3779b97f4a7c15ull;
    auto edge_ok = [=](CellIndex a, CellIndex b) {
      const std::uint64_t key =
          ((static_cast<std::uint64_t>(a.j) * 64 + a.i) << 16) |
          (static_cast<std::uint64_t>(b.j) * 64 + b.i);
      Rng r(mix64(salt, key));
      return r.uniform() < pass_rate;
    };

    const CellIndex source{static_cast<int>(rng.uniform_int(nx)),
                           static_cast<int>(rng.uniform_int(ny)), true};
    PlannerConfig c;
    auto validator = stub_validator(nx, ny, bounds, edge_ok);
    PlanTree t = plan_with_validator(nx, ny, bounds, source,
                                     state_at(test::ref_cell_center(source.i, source.j, nx, ny,
                                                                    bounds)),
                                     validator, c);
    test::DijkstraRef ref = test::dijkstra_ref(nx, ny, bounds, source, edge_ok);

    for (int k = 0; k < nx * ny; ++k) {
      CHECK((t.status[k] == CellStatus::kSettled) == (ref.settled[k] == 1));
      CHECK(t.cost[k] == ref.dist[k]);  // exact, including +inf
      if (!ref.settled[k]) ++grids_with_unreachable;
    }
  }
  CHECK(grids_with_unreachable > 0);  // the sweep actually exercised failures
}

TEST_CASE("settled costs obey the tree triangle inequality") {
  PlannerConfig c;
  Rng rng(3030);
  auto edge_ok = [&](CellIndex, CellIndex) { return true; };
  const ArchiveBounds bounds{0.0, 6.0, 0.0, 5.0};
  auto validator = stub_validator(6, 5, bounds, edge_ok);
  PlanTree t = plan_with_validator(6, 5, bounds, {2, 2, true}, state_at({2.5, 2.5}),
                                   validator, c);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 6; ++i) {
      const int k = t.idx(i, j);
      if (t.status[k] != CellStatus::kSettled || (i == 2 && j == 2)) continue;
      const CellIndex p = t.pred[k];
      REQUIRE(p.i >= 0);
      const double w = distance(t.cell_center(p.i, p.j), t.cell_center(i, j));
      CHECK(t.cost[k] == doctest::Approx(t.cost[t.idx(p.i, p.j)] + w).epsilon(1e-15));
      CHECK(t.cost[k] >= t.cost[t.idx(p.i, p.j)]);
    }
}

TEST_CASE("edge budget never exceeds the directed edge count") {
  Rng rng(4040);
  for (int trial = 0; trial < 20; ++trial) {
    const int nx = 2 + static_cast<int>(rng.uniform_int(7));
    const int ny = 2 + static_cast<int>(rng.uniform_int(7));
    const ArchiveBounds bounds{0.0, static_cast<double>(nx), 0.0, static_cast<double>(ny)};
    const std::uint64_t salt = rng.split(100 + trial).seed();
    auto edge_ok = [=](CellIndex a, CellIndex b) {
      return Rng(mix64(salt, static_cast<std::uint64_t>((a.j * 64 + a.i) * 4096 +
                                                        (b.j * 64 + b.i))))
                 .uniform() < 0.6;
    };
    PlannerConfig c;
    auto validator = stub_validator(nx, ny, bounds, edge_ok);
    PlanTree t = plan_with_validator(nx, ny, bounds, {0, 0, true}, state_at({0.5, 0.5}),
                                     validator, c);
    CHECK(t.edge_rollout_count <= directed_edge_count(nx, ny));
  }
}

TEST_CASE("directed_edge_count matches enumeration") {
  for (auto [nx, ny] : {std::pair{1, 1}, {2, 2}, {3, 3}, {1, 5}, {4, 7}, {32, 32}, {40, 40}}) {
    long long count = 0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            if (di == 0 && dj == 0) continue;
            if (i + di < 0 || i + di >= nx || j + dj < 0 || j + dj >= ny) continue;
            ++count;
          }
    CHECK(directed_edge_count(nx, ny) == count);
  }
}

TEST_CASE("graph_edges: 2x2 grid has 6 undirected edges, ordered") {
  auto edges = graph_edges(2, 2, {0.0, 2.0, 0.0, 2.0});
  CHECK(edges.size() == 6);
  CHECK(directed_edge_count(2, 2) == 12);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    // a < b lexicographically
    CHECK((e.a.i < e.b.i || (e.a.i == e.b.i && e.a.j < e.b.j)));
    const double want = distance(test::ref_cell_center(e.a.i, e.a.j, 2, 2, {0.0, 2.0, 0.0, 2.0}),
                                 test::ref_cell_center(e.b.i, e.b.j, 2, 2, {0.0, 2.0, 0.0, 2.0}));
    CHECK(e.weight == want);
  }
  // 1xN line: N-1 edges
  CHECK(graph_edges(1, 5, {0.0, 1.0, 0.0, 5.0}).size() == 4);
}

TEST_CASE("plan csv round-trips the whole tree") {
  const std::string path = "test_plan.csv";
  PlannerConfig c;
  auto validator = stub_validator(3, 3, kUnit3, [](CellIndex, CellIndex to) {
    return !(to.i == 1 && to.j == 1);
  });
  PlanTree t = plan_with_validator(3, 3, kUnit3, {0, 0, true}, state_at({0.5, 0.5}),
                                   validator, c, "stubworld");
  save_plan_csv(t, path);
  PlanTree back = load_plan_csv(path);
  CHECK(back.nx == t.nx);
  CHECK(back.ny == t.ny);
  CHECK(back.maze_name == "stubworld");
  CHECK(back.source.i == t.source.i);
  CHECK(back.source.j == t.source.j);
  CHECK(back.edge_rollout_count == t.edge_rollout_count);
  CHECK(back.total_sim_steps == t.total_sim_steps);
  for (int k = 0; k < 9; ++k) {
    CHECK(back.status[k] == t.status[k]);
    CHECK(back.cost[k] == t.cost[k]);
    CHECK(back.pred[k].i == t.pred[k].i);
    CHECK(back.pred[k].j == t.pred[k].j);
    CHECK(back.steps_used[k] == t.steps_used[k]);
  }
  // and the rewrite is byte-identical
  save_plan_csv(back, path + "2");
  std::ifstream f1(path, std::ios::binary), f2(path + "2", std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove(path.c_str());
  std::remove((path + "2").c_str());
}

TEST_CASE("plan over real rollouts on the open maze settles everything") {
  MazeSpec maze = builtin_maze("open");
  SimParams sim;
  GridArchive grid(8, 8, {0.0, 32.0, 0.0, 32.0});
  PlannerConfig c;
  c.eps = 2.0;  // half of the 4 m cells
  PlanTree t = plan(maze, sim, PolicyHandle::analytic(), grid, c, initial_state(maze));
  CHECK(t.settled_count() == 64);
  CHECK(t.maze_name == "open");
  CHECK(t.edge_rollout_count <= directed_edge_count(8, 8));
  CHECK(t.total_sim_steps > 0);
  // every settled arrival is inside its cell's arrival radius
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 8; ++i) {
      const int k = t.idx(i, j);
      if (t.status[k] != CellStatus::kSettled || (i == t.source.i && j == t.source.j)) continue;
      CHECK(distance(t.arrival[k].position, t.cell_center(i, j)) <= c.eps);
    }
}

TEST_CASE("planning twice gives bitwise-identical trees at any thread count") {
  MazeSpec maze = builtin_maze("trap2d");
  SimParams sim;
  GridArchive grid(16, 16, {0.0, 32.0, 0.0, 32.0});
  auto run = [&](int threads) {
    PlannerConfig c;
    c.eps = 1.0;
    c.threads = threads;
    c.seed = 77;
    return plan(maze, sim, PolicyHandle::analytic(), grid, c, initial_state(maze));
  };
  PlanTree a = run(1), b = run(1), c4 = run(4);
  auto same = [](const PlanTree& x, const PlanTree& y) {
    REQUIRE(x.nx == y.nx);
    CHECK(x.edge_rollout_count == y.edge_rollout_count);
    CHECK(x.total_sim_steps == y.total_sim_steps);
    for (std::size_t k = 0; k < x.cost.size(); ++k) {
      CHECK(x.status[k] == y.status[k]);
      CHECK(x.cost[k] == y.cost[k]);
      CHECK(x.arrival[k] == y.arrival[k]);
    }
  };
  same(a, b);
  same(a, c4);
}

TEST_CASE("start outside the grid bounds is a config error") {
  MazeSpec maze = builtin_maze("open");
  SimParams sim;
  GridArchive grid(4, 4, {20.0, 24.0, 20.0, 24.0});  // start (16.5,16.5) outside
  PlannerConfig c;
  CHECK_THROWS_AS(plan(maze, sim, PolicyHandle::analytic(), grid, c, initial_state(maze)),
                  ConfigError);
}

TEST_CASE("execute_to_cell replays the tree") {
  MazeSpec maze = builtin_maze("open");
  SimParams sim;
  RewardCoeffs reward;
  // 1 m cells put the start (16.5, 16.5) exactly at its cell's center
  GridArchive grid(32, 32, {0.0, 32.0, 0.0, 32.0});
  PlannerConfig c;
  PolicyHandle h = PolicyHandle::analytic();
  PlanTree t = plan(maze, sim, h, grid, c, initial_state(maze));
  Rng rng(1);

  // the source cell is reached with zero steps
  RolloutResult at_source = execute_to_cell(maze, sim, reward, h, t, t.source, c, rng);
  CHECK(at_source.reached);
  CHECK(at_source.steps_used == 0);

  // a far corner is reached leg by leg
  RolloutResult corner = execute_to_cell(maze, sim, reward, h, t, {31, 31, true}, c, rng);
  CHECK(corner.reached);
  CHECK(corner.steps_used > 0);
  CHECK(distance(corner.final_state.position, t.cell_center(31, 31)) <= c.eps);

  // unreachable targets throw
  GridArchive tiny(2, 2, {0.0, 32.0, 0.0, 32.0});
  PlannerConfig c2;
  c2.eps = 0.25;  // too tight for 16 m hops
  c2.max_steps_per_edge = 5;
  PlanTree t2 = plan(maze, sim, h, tiny, c2, initial_state(maze));
  bool some_unreachable = false;
  for (int j = 0; j < 2 && !some_unreachable; ++j)
    for (int i = 0; i < 2; ++i)
      if (t2.status[t2.idx(i, j)] == CellStatus::kUnreachable) {
        CHECK_THROWS_AS(execute_to_cell(maze, sim, reward, h, t2, {i, j, true}, c2, rng),
                        UnreachableCellError);
        some_unreachable = true;
        break;
      }
  CHECK(some_unreachable);

  // truncation cuts the journey short
  Rng rng2(1);
  RolloutResult cut = execute_to_cell(maze, sim, reward, h, t, {31, 31, true}, c, rng2,
                                      /*max_total_steps=*/3);
  CHECK_FALSE(cut.reached);
  CHECK(cut.steps_used == 3);
}

TEST_SUITE_END();

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qdplan/archive.hpp"
#include "qdplan/maze.hpp"
#include "qdplan/policy.hpp"
#include "qdplan/rollout.hpp"
#include "qdplan/sim.hpp"

namespace qdplan {

enum class EdgeWeightMode { kEuclidean, kStepCount };

struct PlannerConfig {
  double eps = 0.5;            // arrival radius, m; must be > 0
  int max_steps_per_edge = 150;
  std::uint64_t seed = 1;
  int revalidation_retries = 0;  // 0 = failed edges are final
  EdgeWeightMode weight_mode = EdgeWeightMode::kEuclidean;
  int threads = 1;

  void validate() const;
};

enum class CellStatus : std::uint8_t { kUnreachable = 0, kSettled = 1 };

// Shortest-path tree over the archive grid: costs, predecessors, and the
// memoized dynamical state in which each settled cell was first reached.
struct PlanTree {
  int nx = 0, ny = 0;
  ArchiveBounds bounds;
  CellIndex source;
  std::string maze_name;

  std::vector<CellStatus> status;
  std::vector<double> cost;        // +inf when unreachable
  std::vector<CellIndex> pred;     // (-1,-1) for source and unreachable cells
  std::vector<SimState> arrival;   // meaningful for settled cells
  std::vector<int> steps_used;     // rollout steps of the edge that settled the cell

  long long edge_rollout_count = 0;
  long long total_sim_steps = 0;

  int idx(int i, int j) const { return j * nx + i; }
  int settled_count() const;
  bool settled(CellIndex c) const { return status[idx(c.i, c.j)] == CellStatus::kSettled; }
  Vec2 cell_center(int i, int j) const;
};

// Outcome of attempting one directed edge: did the rollout arrive, in what
// state, and at what step cost.
struct EdgeOutcome {
  bool ok = false;
  SimState arrival;
  int steps_used = 0;
};

using EdgeValidator =
    std::function<EdgeOutcome(CellIndex from, CellIndex to, const SimState& from_state)>;

// Dijkstra over the 8-connected cell grid where relaxing an edge requires the
// validator to succeed. Each directed edge is attempted at most once, and
// only when it would improve the tentative cost of its head. Tie-breaking in
// the priority queue is (cost, i, j) lexicographic. The validator's arrival
// state is memoized and used as the start of onward rollouts.
PlanTree plan_with_validator(int nx, int ny, const ArchiveBounds& bounds, CellIndex source_cell,
                             const SimState& start, const EdgeValidator& validator,
                             const PlannerConfig& config, const std::string& maze_name = "");

// Full pipeline: the validator rolls the policy out from the tail cell's
// arrival state toward the head cell's center; the edge exists iff it gets
// within eps in at most max_steps_per_edge steps. The planner sees the maze
// only through those rollouts.
PlanTree plan(const MazeSpec& maze, const SimParams& sim, const PolicyHandle& policy,
              const GridArchive& archive, const PlannerConfig& config, const SimState& start);

// Replays the predecessor chain from source to target leg by leg. `ret`
// accumulates reward measured against the final target's center under
// `reward`; the reached flag reports whether the final position is within eps
// of the target center. max_total_steps >= 0 truncates the whole execution.
RolloutResult execute_to_cell(const MazeSpec& maze, const SimParams& sim,
                              const RewardCoeffs& reward, const PolicyHandle& policy,
                              const PlanTree& plan, CellIndex target,
                              const PlannerConfig& config, Rng& rng,
                              long long max_total_steps = -1);

double coverage_of(const PlanTree& plan);

struct GraphEdge {
  CellIndex a, b;  // lexicographically a < b
  double weight;
};

// All undirected 8-neighbor edges, each once, ordered by (a.i, a.j, b.i, b.j).
std::vector<GraphEdge> graph_edges(int nx, int ny, const ArchiveBounds& bounds);
long long directed_edge_count(int nx, int ny);

// CSV: "# maze=<name>" and geometry comments, then
// i,j,status,cost,pred_i,pred_j,steps_used rows for every cell.
void save_plan_csv(const PlanTree& plan, const std::string& path);
PlanTree load_plan_csv(const std::string& path);

constexpr double kInfCost = std::numeric_limits<double>::infinity();

}  // namespace qdplan

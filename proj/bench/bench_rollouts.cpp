// Times batch rollout evaluation with the serial loop vs the OpenMP-backed
// one and verifies the results are bit-identical. Rollout batches are the
// hot path shared by the planner's edge validation, the baseline's candidate
// evaluations, and the re-evaluation protocol, and every call site writes
// only its own output slot — which is what makes thread count irrelevant to
// the results.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "qdplan/maze.hpp"
#include "qdplan/parallel.hpp"
#include "qdplan/policy.hpp"
#include "qdplan/rng.hpp"
#include "qdplan/rollout.hpp"
#include "qdplan/sim.hpp"

using namespace qdplan;

namespace {

struct BatchResult {
  std::vector<RolloutResult> results;
  double seconds = 0.0;
};

BatchResult run_batch(int n, int threads, bool serial, const MazeSpec& maze,
                      const SimParams& sim, const RewardCoeffs& reward,
                      const PolicyHandle& policy) {
  BatchResult out;
  out.results.resize(n);
  Rng root(20260814);
  std::vector<Vec2> goals(n);
  for (int k = 0; k < n; ++k) {
    Rng g = root.split(k);
    goals[k] = {g.uniform(1.0, maze.width - 1.0), g.uniform(1.0, maze.height - 1.0)};
  }
  RolloutOptions opts;
  opts.max_steps = 400;
  auto body = [&](long long k) {
    Rng rng(mix64(99, static_cast<std::uint64_t>(k)));
    out.results[k] =
        rollout_to_goal(maze, sim, reward, policy, initial_state(maze), goals[k], opts, rng);
  };
  auto t0 = std::chrono::steady_clock::now();
  if (serial)
    for_each_index_serial(n, body);
  else
    for_each_index(n, threads, body);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

bool identical(const std::vector<RolloutResult>& a, const std::vector<RolloutResult>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].reached != b[k].reached || a[k].steps_used != b[k].steps_used) return false;
    if (a[k].ret != b[k].ret) return false;  // bitwise: no tolerance
    if (!(a[k].final_state == b[k].final_state)) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int n = 2000;
  int threads = resolve_threads(0);  // hardware count
  if (argc > 1) n = std::atoi(argv[1]);
  if (argc > 2) threads = std::atoi(argv[2]);

  MazeSpec maze = builtin_maze("hardmaze2d");
  SimParams sim;
  RewardCoeffs reward;
  PolicyHandle policy = PolicyHandle::analytic();

  std::printf("batch of %d rollouts on %s\n", n, maze.name.c_str());
  BatchResult serial = run_batch(n, 1, /*serial=*/true, maze, sim, reward, policy);
  std::printf("  serial reference: %8.3f s\n", serial.seconds);
  BatchResult par1 = run_batch(n, 1, /*serial=*/false, maze, sim, reward, policy);
  std::printf("  parallel path, 1 thread: %8.3f s\n", par1.seconds);
  BatchResult parN = run_batch(n, threads, /*serial=*/false, maze, sim, reward, policy);
  std::printf("  parallel path, %d thread%s: %8.3f s (%.2fx vs serial)\n", threads,
              threads == 1 ? "" : "s", parN.seconds,
              parN.seconds > 0 ? serial.seconds / parN.seconds : 0.0);

  if (!identical(serial.results, par1.results) || !identical(serial.results, parN.results)) {
    std::printf("MISMATCH: parallel results differ from serial reference\n");
    return 1;
  }
  std::printf("all %d results bit-identical across schedules\n", n);
  return 0;
}

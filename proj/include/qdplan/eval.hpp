#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qdplan/archive.hpp"
#include "qdplan/map_elites.hpp"
#include "qdplan/maze.hpp"
#include "qdplan/planner.hpp"
#include "qdplan/policy.hpp"
#include "qdplan/sim.hpp"

namespace qdplan {

struct EvalProtocol {
  int n_reevals = 50;
  RewardCoeffs common_reward;
  int episode_len = 250;
  std::uint64_t seed_base = 9000;

  void validate() const;
};

// A cell counts as covered in corrected planner metrics only when more than
// half of its re-evaluations succeed.
constexpr double kMajorityThreshold = 0.5;

struct CellOutcome {
  int i = 0, j = 0;  // original cell
  std::string occupant_id;
  double success_rate = 0.0;
  double mean_objective = 0.0;
  Vec2 mean_descriptor;
};

struct CorrectedReport {
  std::string method;
  std::string maze;
  std::uint64_t seed = 0;
  int n_reevals = 0;
  int nx = 0, ny = 0;
  ArchiveBounds bounds;
  QdMetrics metrics;  // corrected archive metrics; dem vs original targets
  std::vector<CellOutcome> cells;  // sorted by (i, j)
  long long rollout_budget = 0;   // rollouts spent producing the evaluated artifact
  long long sim_step_budget = 0;
};

double descriptor_error_mean(const std::vector<Vec2>& achieved, const std::vector<Vec2>& targets);

// One re-evaluation of one original cell's occupant.
struct ReevalSample {
  double objective = 0.0;
  Vec2 descriptor;
  bool success = false;
};

struct ReevalCell {
  int i = 0, j = 0;
  std::string occupant_id;
};

using CellEvaluator = std::function<ReevalSample(const ReevalCell& cell, int k)>;

// Shared core: re-evaluates every listed cell n_reevals times (parallel over
// cell x seed, aggregated in that order), builds a corrected archive from the
// mean descriptor/objective, and computes metrics with DEM measured against
// the original cells' centers. majority_filter drops cells whose success rate
// is not above the majority threshold before insertion.
CorrectedReport corrected_from_evaluations(const std::vector<ReevalCell>& cells, int nx, int ny,
                                           const ArchiveBounds& bounds,
                                           const CellEvaluator& evaluator,
                                           const EvalProtocol& protocol, bool majority_filter,
                                           int threads);

using ParamsFetcher = std::function<const PolicyParams&(const std::string& occupant_id)>;

// Re-evaluates archive occupants (success = landing back in the occupied
// cell). fetch must throw MissingPolicyError for unknown ids.
CorrectedReport corrected_metrics_for_archive(const GridArchive& archive, const MazeSpec& maze,
                                              const SimParams& sim, const ParamsFetcher& fetch,
                                              const EvalProtocol& protocol, int threads = 1);

// Re-evaluates planner reachability for every settled cell over full
// episodes: the predecessor chain is replayed (truncated at episode_len),
// then the policy holds at the target center for the remaining steps.
// success = within eps of the target center at any step; descriptor = the
// episode's final position; objective = cumulative common_reward against the
// target center. Coverage applies the majority rule.
CorrectedReport corrected_metrics_for_planner(const MazeSpec& maze, const SimParams& sim,
                                              const PolicyHandle& policy, const PlanTree& plan,
                                              const PlannerConfig& planner_config,
                                              const EvalProtocol& protocol, int threads = 1);

struct MazeEvalSetup {
  MazeSpec maze;
  int nx = 0, ny = 0;
  ArchiveBounds bounds;
  PlannerConfig planner;
  EvalProtocol protocol;
};

// Plans and evaluates on both mazes with the one policy, reporting the O(1)
// storage accounting alongside the paired reports.
struct GeneralizationResult {
  CorrectedReport report_a, report_b;
  PlanTree plan_a, plan_b;
  int stored_policy_files = 1;
  long long policy_bytes = 0;
  long long directed_edges_a = 0, directed_edges_b = 0;
};

GeneralizationResult generalization_experiment(const PolicyHandle& policy, long long policy_bytes,
                                               const SimParams& sim, const MazeEvalSetup& a,
                                               const MazeEvalSetup& b);

// Comparison table; rows sorted by (method, maze), values copied verbatim
// from the reports.
struct ComparisonRow {
  std::string method, maze;
  double qd_score = 0.0;
  double qd_score_offset = 0.0;
  std::optional<double> offset_baseline;
  double coverage = 0.0;
  std::optional<double> best;
  std::optional<double> dem;
  long long rollout_budget = 0;
  long long sim_step_budget = 0;
};

std::vector<ComparisonRow> compare_methods(const std::vector<CorrectedReport>& reports);
void save_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path);
std::string render_comparison_text(const std::vector<ComparisonRow>& rows);

// Reports round-trip through CSV bit-exactly (17-significant-digit decimals).
void save_report_csv(const CorrectedReport& report, const std::string& path);
CorrectedReport load_report_csv(const std::string& path);

}  // namespace qdplan

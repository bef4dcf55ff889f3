#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qdplan/archive.hpp"
#include "qdplan/maze.hpp"
#include "qdplan/policy.hpp"
#include "qdplan/rng.hpp"
#include "qdplan/sim.hpp"

namespace qdplan {

struct MeConfig {
  int batch_size = 64;
  long long iterations = 200;
  double sigma = 0.05;  // mutation std on the flat parameter vector
  int init_pop = 128;
  int episode_len = 250;
  std::uint64_t seed = 1;
  std::vector<int> hidden = default_hidden();
  int threads = 1;

  void validate() const;
  // Every candidate consumes exactly episode_len steps, so the budget is
  // (init_pop + iterations * batch_size) * episode_len.
  long long total_sim_steps() const {
    return (init_pop + iterations * static_cast<long long>(batch_size)) * episode_len;
  }
  long long total_rollouts() const { return init_pop + iterations * static_cast<long long>(batch_size); }
};

// Deterministic unconditioned rollout: the goal channel of the observation is
// zeroed, the policy runs in mean-action mode for exactly episode_len steps.
// Objective is the cumulative reward (whose goal term is then identically
// zero); descriptor is the final position.
struct CandidateEval {
  double objective = 0.0;
  Vec2 descriptor;
};

CandidateEval evaluate_candidate(const PolicyParams& params, const MazeSpec& maze,
                                 const SimParams& sim, const RewardCoeffs& reward,
                                 int episode_len);

PolicyParams mutate_params(const PolicyParams& parent, double sigma, Rng& rng);

struct MeLogRow {
  long long iteration = 0;  // 0 = after init population
  long long evaluations = 0;
  double qd_score = 0.0;
  double qd_score_offset = 0.0;
  double coverage = 0.0;
  double best = 0.0;
};

struct MeResult {
  GridArchive archive;
  std::map<std::string, PolicyParams> elites;  // occupant_id -> params, current occupants only
  std::vector<MeLogRow> log;
  long long total_rollouts = 0;
  long long total_sim_steps = 0;
};

// One generation: batch_size children of uniformly chosen elites, evaluated
// (in parallel when threads > 1) and inserted in candidate order.
struct MeStepStats {
  int inserted = 0;
  int rejected = 0;
};

MeStepStats me_step(GridArchive& archive, std::map<std::string, PolicyParams>& elites,
                    const MeConfig& config, const MazeSpec& maze, const SimParams& sim,
                    const RewardCoeffs& reward, long long iteration, Rng& rng);

MeResult run_map_elites(const MazeSpec& maze, const SimParams& sim, const RewardCoeffs& reward,
                        const MeConfig& config, int nx, int ny, const ArchiveBounds& bounds);

void save_me_log_csv(const std::vector<MeLogRow>& log, const std::string& path);

}  // namespace qdplan

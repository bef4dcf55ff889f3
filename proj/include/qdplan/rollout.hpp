#pragma once

#include <vector>

#include "qdplan/maze.hpp"
#include "qdplan/policy.hpp"
#include "qdplan/rng.hpp"
#include "qdplan/sim.hpp"

namespace qdplan {

struct RolloutOptions {
  int max_steps = 150;
  double eps = 0.5;  // arrival radius around the goal, m
  bool record_trajectory = false;
};

struct RolloutResult {
  bool reached = false;
  SimState final_state;
  int steps_used = 0;
  double ret = 0.0;                // cumulative reward over executed steps
  std::vector<Vec2> trajectory;    // positions incl. start, when recorded
};

// Drives the policy toward `goal` until arrival (distance <= eps, checked
// before each step so a start at the goal uses zero steps) or max_steps.
// Rewards are evaluated on post-step states against `goal`; heading-excursion
// terms are measured against the rollout's initial heading.
RolloutResult rollout_to_goal(const MazeSpec& maze, const SimParams& sim,
                              const RewardCoeffs& reward, const PolicyHandle& policy,
                              const SimState& start, Vec2 goal, const RolloutOptions& opts,
                              Rng& rng);

}  // namespace qdplan

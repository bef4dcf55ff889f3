#include "qdplan/rollout.hpp"

#include "qdplan/errors.hpp"

namespace qdplan {

RolloutResult rollout_to_goal(const MazeSpec& maze, const SimParams& sim,
                              const RewardCoeffs& reward, const PolicyHandle& policy,
                              const SimState& start, Vec2 goal, const RolloutOptions& opts,
                              Rng& rng) {
  if (!(opts.eps > 0.0)) throw ConfigError("rollout: eps must be positive");
  if (opts.max_steps <= 0) throw ConfigError("rollout: max_steps must be positive");

  RolloutResult res;
  res.final_state = start;
  if (opts.record_trajectory) res.trajectory.push_back(start.position);

  const double start_heading = start.heading;
  SimState state = start;
  if (distance(state.position, goal) <= opts.eps) {
    res.reached = true;
    return res;
  }
  for (int t = 0; t < opts.max_steps; ++t) {
    const GoalObservation obs = observe(state, goal);
    const Vec2 action = act(policy, obs, rng);
    state = step(state, action, maze, sim);
    const auto rot = rotation_terms(state, start_heading, sim);
    res.ret += reward_eq(goal - state.position, action, rot[0], rot[1], state.omega, reward,
                         /*alive=*/true);
    ++res.steps_used;
    if (opts.record_trajectory) res.trajectory.push_back(state.position);
    if (distance(state.position, goal) <= opts.eps) {
      res.reached = true;
      break;
    }
  }
  res.final_state = state;
  return res;
}

}  // namespace qdplan

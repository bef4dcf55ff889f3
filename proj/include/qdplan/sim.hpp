#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qdplan/geometry.hpp"
#include "qdplan/maze.hpp"

namespace qdplan {

enum class RotationPenalty {
  kNone,              // R_x = R_y = 0 (planar default)
  kHeadingExcursion,  // R_x = wrapped heading deviation from the start heading, R_y = 0
};

// Dynamics constants. Integration is the exact solution of the damped linear
// ODE over one dt with the force held constant, so trajectories are
// reproducible to the bit and independent of any solver tolerance.
struct SimParams {
  double dt = 0.05;            // seconds
  double mass = 1.0;           // kg
  double lin_damping = 1.0;    // 1/s
  double ang_damping = 1.0;    // 1/s
  double force_scale = 2.0;    // N per unit action
  RotationPenalty rotation_penalty = RotationPenalty::kNone;

  void validate() const;
  // Terminal speed for a saturated action: force_scale / (mass * lin_damping).
  double max_speed() const { return force_scale / (mass * lin_damping); }
};

// Full dynamical state; enough to resume simulation deterministically.
struct SimState {
  Vec2 position;
  double heading = 0.0;  // radians
  Vec2 velocity;
  double omega = 0.0;    // rad/s
  std::int64_t step = 0;

  bool operator==(const SimState&) const = default;
};

SimState initial_state(const MazeSpec& maze);

// One dt of dynamics + collision resolution. Action components are clamped to
// [-1,1]; collisions project the position out of obstacles and zero the
// velocity component pointing into the surface.
SimState step(const SimState& state, Vec2 action, const MazeSpec& maze, const SimParams& params);

// Coefficients of the per-step reward. Penalty coefficients are negative, the
// alive bonus positive; validate() enforces the signs.
struct RewardCoeffs {
  double c_g = -1.0;      // goal distance
  double c_a = -0.1;      // control cost
  double c_r = -0.05;     // rotation excursion |R_x| + |R_y|
  double c_omega = -0.01; // angular speed
  double c_alive = 1.0;
  double r_alive = 1.0;

  void validate() const;
};

// r = c_g * (|p_rel|^2 if d >= 1 else |p_rel|) + c_a*|a|^2
//   + c_r*(|rot_x|+|rot_y|) + c_omega*|omega| + alive * c_alive * r_alive.
// The goal term switches from squared to plain L2 norm inside 1 m; the two
// branches agree at d == 1.
double reward_eq(Vec2 p_rel, Vec2 action, double rot_x, double rot_y, double omega,
                 const RewardCoeffs& coeffs, bool alive);

// Rotation excursion terms for a state under the configured penalty mode.
std::array<double, 2> rotation_terms(const SimState& state, double start_heading,
                                     const SimParams& params);

// Policy observation: exact goal offset plus the proprioceptive base
// (sin/cos heading, velocities, angular rate). Total dimension 7.
struct GoalObservation {
  Vec2 p_rel;
  std::array<double, 5> base;  // sin h, cos h, vx, vy, omega

  static constexpr int kDim = 7;
  std::array<double, kDim> flat() const {
    return {p_rel.x, p_rel.y, base[0], base[1], base[2], base[3], base[4]};
  }
  Vec2 velocity() const { return {base[2], base[3]}; }
};

GoalObservation observe(const SimState& state, Vec2 goal);

}  // namespace qdplan

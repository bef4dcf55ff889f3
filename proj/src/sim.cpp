#include "qdplan/sim.hpp"

#include <cmath>

#include "qdplan/errors.hpp"

namespace qdplan {
namespace {

constexpr int kMaxCollisionIters = 8;

// Exact update of one damped axis over dt:
//   v' = -k v + f/m  =>  v(t+dt) = v_ss + (v - v_ss) e^{-k dt},
//   x(t+dt) = x + v_ss dt + (v - v_ss)(1 - e^{-k dt})/k,  v_ss = f/(m k).
struct AxisUpdate {
  double x;
  double v;
};

AxisUpdate damped_axis(double x, double v, double force, double mass, double k, double dt) {
  const double v_ss = force / (mass * k);
  const double decay = std::exp(-k * dt);
  const double dv = v - v_ss;
  return {x + v_ss * dt + dv * (1.0 - decay) / k, v_ss + dv * decay};
}

}  // namespace

void SimParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim: dt must be positive");
  if (!(mass > 0.0)) throw ConfigError("sim: mass must be positive");
  if (!(lin_damping > 0.0)) throw ConfigError("sim: lin_damping must be positive");
  if (!(ang_damping > 0.0)) throw ConfigError("sim: ang_damping must be positive");
  if (!(force_scale > 0.0)) throw ConfigError("sim: force_scale must be positive");
}

void RewardCoeffs::validate() const {
  if (!(c_g < 0.0)) throw ConfigError("reward: c_g must be negative");
  if (!(c_a < 0.0)) throw ConfigError("reward: c_a must be negative");
  if (!(c_r < 0.0)) throw ConfigError("reward: c_r must be negative");
  if (!(c_omega < 0.0)) throw ConfigError("reward: c_omega must be negative");
  if (!(c_alive > 0.0)) throw ConfigError("reward: c_alive must be positive");
  if (!(r_alive > 0.0)) throw ConfigError("reward: r_alive must be positive");
}

SimState initial_state(const MazeSpec& maze) {
  SimState s;
  s.position = maze.start;
  s.heading = maze.start_heading;
  return s;
}

SimState step(const SimState& state, Vec2 action, const MazeSpec& maze, const SimParams& params) {
  action = clamp_unit(action);
  const Vec2 force{action.x * params.force_scale, action.y * params.force_scale};

  SimState next = state;
  const AxisUpdate ux = damped_axis(state.position.x, state.velocity.x, force.x, params.mass,
                                    params.lin_damping, params.dt);
  const AxisUpdate uy = damped_axis(state.position.y, state.velocity.y, force.y, params.mass,
                                    params.lin_damping, params.dt);
  next.position = {ux.x, uy.x};
  next.velocity = {ux.v, uy.v};

  // No torque input in this action space: heading/omega decay freely.
  const double adecay = std::exp(-params.ang_damping * params.dt);
  next.heading = wrap_angle(state.heading + state.omega * (1.0 - adecay) / params.ang_damping);
  next.omega = state.omega * adecay;

  // Clamp to the arena, killing the velocity component into the boundary.
  auto clamp_axis = [](double& x, double& v, double lo, double hi) {
    if (x < lo) {
      x = lo;
      if (v < 0.0) v = 0.0;
    } else if (x > hi) {
      x = hi;
      if (v > 0.0) v = 0.0;
    }
  };
  clamp_axis(next.position.x, next.velocity.x, 0.0, maze.width);
  clamp_axis(next.position.y, next.velocity.y, 0.0, maze.height);

  // Push out of any obstacle along the minimum-penetration axis. A few
  // passes settle corner cases where one projection lands inside a
  // neighbouring rectangle.
  for (int iter = 0; iter < kMaxCollisionIters; ++iter) {
    bool moved = false;
    for (const Rect& r : maze.obstacles) {
      if (!r.contains_strict(next.position)) continue;
      const double pen_left = next.position.x - r.x0;
      const double pen_right = r.x1 - next.position.x;
      const double pen_down = next.position.y - r.y0;
      const double pen_up = r.y1 - next.position.y;
      double best = pen_left;
      int axis = 0;
      if (pen_right < best) {
        best = pen_right;
        axis = 1;
      }
      if (pen_down < best) {
        best = pen_down;
        axis = 2;
      }
      if (pen_up < best) {
        best = pen_up;
        axis = 3;
      }
      switch (axis) {
        case 0:
          next.position.x = r.x0;
          if (next.velocity.x > 0.0) next.velocity.x = 0.0;
          break;
        case 1:
          next.position.x = r.x1;
          if (next.velocity.x < 0.0) next.velocity.x = 0.0;
          break;
        case 2:
          next.position.y = r.y0;
          if (next.velocity.y > 0.0) next.velocity.y = 0.0;
          break;
        default:
          next.position.y = r.y1;
          if (next.velocity.y < 0.0) next.velocity.y = 0.0;
          break;
      }
      moved = true;
    }
    if (!moved) break;
  }

  next.step = state.step + 1;
  return next;
}

double reward_eq(Vec2 p_rel, Vec2 action, double rot_x, double rot_y, double omega,
                 const RewardCoeffs& coeffs, bool alive) {
  const double d = p_rel.norm();
  const double goal_term = (d >= 1.0) ? p_rel.norm2() : d;
  double r = coeffs.c_g * goal_term;
  r += coeffs.c_a * action.norm2();
  r += coeffs.c_r * (std::abs(rot_x) + std::abs(rot_y));
  r += coeffs.c_omega * std::abs(omega);
  if (alive) r += coeffs.c_alive * coeffs.r_alive;
  return r;
}

std::array<double, 2> rotation_terms(const SimState& state, double start_heading,
                                     const SimParams& params) {
  switch (params.rotation_penalty) {
    case RotationPenalty::kHeadingExcursion:
      return {wrap_angle(state.heading - start_heading), 0.0};
    case RotationPenalty::kNone:
    default:
      return {0.0, 0.0};
  }
}

GoalObservation observe(const SimState& state, Vec2 goal) {
  GoalObservation obs;
  obs.p_rel = goal - state.position;
  obs.base = {std::sin(state.heading), std::cos(state.heading), state.velocity.x,
              state.velocity.y, state.omega};
  return obs;
}

}  // namespace qdplan

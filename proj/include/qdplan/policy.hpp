#pragma once

#include <string>
#include <vector>

#include "qdplan/geometry.hpp"
#include "qdplan/mlp.hpp"
#include "qdplan/rng.hpp"
#include "qdplan/sim.hpp"

namespace qdplan {

enum class PolicyKind { kAnalytic, kNeural };
enum class ActionMode { kDeterministic, kStochastic };

// Proportional-derivative pursuit gains; tuned once against the default
// dynamics (critically damped in the linear regime) and frozen.
struct AnalyticGains {
  double kp = 2.0;
  double kd = 1.5;
};

// clamp(kp * p_rel - kd * v, [-1,1]) componentwise.
Vec2 analytic_controller_law(Vec2 p_rel, Vec2 velocity, AnalyticGains gains);

// Gaussian-policy parameter bundle. flat_weights holds the actor network
// parameters (layer by layer, weights then bias) followed by act_dim
// per-action log-std entries — the full set implied by the shapes of a
// Gaussian head.
struct PolicyParams {
  int obs_dim = 0;
  int act_dim = 0;
  Shapes layer_shapes;
  std::vector<double> flat_weights;

  std::size_t expected_size() const;
  void validate() const;  // throws shape-mismatch on any inconsistency

  const double* net() const { return flat_weights.data(); }
  double* net() { return flat_weights.data(); }
  const double* log_std() const { return flat_weights.data() + flat_weights.size() - act_dim; }
  double* log_std() { return flat_weights.data() + flat_weights.size() - act_dim; }

  // Zero-initialized params for a tanh MLP with the given hidden widths.
  static PolicyParams zeros(int obs_dim, int act_dim, const std::vector<int>& hidden);
};

constexpr int kDefaultHiddenWidth = 64;
inline std::vector<int> default_hidden() { return {kDefaultHiddenWidth, kDefaultHiddenWidth}; }

struct PolicyHandle {
  PolicyKind kind = PolicyKind::kAnalytic;
  ActionMode action_mode = ActionMode::kDeterministic;
  AnalyticGains gains;
  PolicyParams params;  // neural only

  static PolicyHandle analytic(AnalyticGains g = {});
  static PolicyHandle neural(PolicyParams p, ActionMode mode = ActionMode::kDeterministic);
};

// Action in [-1,1]^2. Deterministic mode squashes the actor mean; stochastic
// mode samples the diagonal Gaussian first, and its output lies strictly
// inside (-1,1). The rng is untouched in deterministic/analytic modes.
Vec2 act(const PolicyHandle& policy, const GoalObservation& obs, Rng& rng);

// Binary round-trip: magic "GCPOL1", little-endian u32 counts
// (obs_dim, act_dim, n_layers, then per-layer in/out), then flat_weights as
// little-endian 64-bit floats. Trailing bytes or truncation are corrupt-file
// errors; expected_obs_dim >= 0 enforces a shape match against the caller's
// environment.
void save_policy(const PolicyHandle& policy, const std::string& path);
PolicyHandle load_policy(const std::string& path, int expected_obs_dim = -1);

}  // namespace qdplan

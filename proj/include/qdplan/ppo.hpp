#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qdplan/maze.hpp"
#include "qdplan/policy.hpp"
#include "qdplan/rng.hpp"
#include "qdplan/sim.hpp"

namespace qdplan {

struct PpoConfig {
  double goal_radius = 5.0;   // m; goals sampled uniformly over this disk
  int n_envs = 16;
  int steps_per_rollout = 256;
  long long total_steps = 2'000'000;
  double lr = 3e-4;
  double clip_eps = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatches = 8;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double adam_eps = 1e-5;
  std::uint64_t seed = 1;

  // Goal bookkeeping within the persistent episodes: a reach (within
  // eps_reach) or a timeout (goal_timeout steps on one goal) ends the
  // "goal episode" — the value bootstrap is cut and a fresh goal is sampled
  // without resetting the dynamics.
  double eps_reach = 0.5;
  int goal_timeout = 150;

  std::vector<int> hidden = default_hidden();
  int threads = 1;
  int checkpoint_every = 0;  // iterations; 0 disables

  void validate() const;
  long long batch_size() const { return static_cast<long long>(n_envs) * steps_per_rollout; }
  long long iterations() const;  // ceil(total_steps / batch), at least 1
};

struct TrainLogRow {
  int iteration = 0;
  long long steps = 0;  // cumulative simulator steps
  double mean_return = 0.0;  // mean return of goal episodes ended this iteration (0 if none)
  double mean_goal_distance_final = 0.0;
  double success_rate = 0.0;  // reaches / goal episodes ended this iteration
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
};

void save_train_log_csv(const TrainLog& log, const std::string& path);

// Uniform over the radius-r disk around agent_pos, rejection-sampled into
// free in-bounds space; after 1000 failed tries falls back to agent_pos.
// tries_out (when given) reports how many draws were made.
Vec2 sample_goal(Vec2 agent_pos, double radius, const MazeSpec& maze, Rng& rng,
                 int* tries_out = nullptr);

// Generalized advantage estimation. values must hold one bootstrap entry more
// than rewards/dones. Advantages are returned unnormalized; returns are
// advantage + value.
void compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                 const std::vector<std::uint8_t>& dones, double gamma, double lambda,
                 std::vector<double>& advantages, std::vector<double>& returns);

// One sample of collected experience (actions kept pre-squash so importance
// ratios use the same Gaussian the sampler did; the tanh Jacobian cancels).
struct PpoBatch {
  int obs_dim = 0;
  int act_dim = 0;
  std::vector<double> obs;       // n x obs_dim
  std::vector<double> actions;   // n x act_dim, pre-squash
  std::vector<double> log_probs; // n
  std::vector<double> advantages;
  std::vector<double> returns;
  long long size() const { return static_cast<long long>(log_probs.size()); }
};

struct PpoLossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

// Mean loss over the batch, with gradients accumulated into the given
// buffers when non-null. Advantages are used as stored (normalize upstream).
PpoLossStats ppo_loss(const PolicyParams& actor, const Shapes& critic_shapes,
                      const std::vector<double>& critic_params, const PpoBatch& batch,
                      const std::vector<long long>& indices, const PpoConfig& config,
                      std::vector<double>* actor_grad, std::vector<double>* critic_grad);

// Adam state for one flat parameter vector.
struct AdamState {
  std::vector<double> m, v;
  long long t = 0;
  void init(std::size_t n);
  void update(std::vector<double>& params, const std::vector<double>& grad, double lr,
              double eps);
};

// In-place epochs x minibatches clipped-surrogate update. Advantages are
// normalized over the whole batch first. Throws on non-finite losses or
// gradients, with the offending iteration in the message.
PpoLossStats ppo_update(PolicyParams& actor, const Shapes& critic_shapes,
                        std::vector<double>& critic_params, AdamState& actor_adam,
                        AdamState& critic_adam, PpoBatch& batch, const PpoConfig& config,
                        Rng& rng);

using CheckpointFn = std::function<void(int iteration, const PolicyHandle& policy)>;

// Full training loop on persistent parallel environments. Deterministic for a
// fixed seed at any thread count (per-env rng streams; serial updates).
struct TrainResult {
  PolicyHandle policy;
  TrainLog log;
  long long total_env_steps = 0;
};

TrainResult train(const PpoConfig& config, const MazeSpec& maze, const SimParams& sim,
                  const RewardCoeffs& reward, const CheckpointFn& checkpoint = nullptr);

}  // namespace qdplan

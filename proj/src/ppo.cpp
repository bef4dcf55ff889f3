#include "qdplan/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "qdplan/csvio.hpp"
#include "qdplan/errors.hpp"
#include "qdplan/parallel.hpp"

namespace qdplan {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
constexpr int kGoalSampleTries = 1000;
}  // namespace

void PpoConfig::validate() const {
  if (!(goal_radius > 0.0)) throw ConfigError("ppo: goal_radius must be positive");
  if (n_envs <= 0) throw ConfigError("ppo: n_envs must be positive");
  if (steps_per_rollout <= 0) throw ConfigError("ppo: steps_per_rollout must be positive");
  if (total_steps <= 0) throw ConfigError("ppo: total_steps must be positive");
  if (!(lr > 0.0)) throw ConfigError("ppo: lr must be positive");
  if (!(clip_eps > 0.0)) throw ConfigError("ppo: clip_eps must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo: gamma must be in (0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw ConfigError("ppo: gae_lambda must be in [0,1]");
  if (epochs <= 0) throw ConfigError("ppo: epochs must be positive");
  if (minibatches <= 0) throw ConfigError("ppo: minibatches must be positive");
  if (value_coef < 0.0 || entropy_coef < 0.0)
    throw ConfigError("ppo: loss coefficients must be non-negative");
  if (!(max_grad_norm > 0.0)) throw ConfigError("ppo: max_grad_norm must be positive");
  if (!(eps_reach > 0.0)) throw ConfigError("ppo: eps_reach must be positive");
  if (goal_timeout <= 0) throw ConfigError("ppo: goal_timeout must be positive");
  if (checkpoint_every < 0) throw ConfigError("ppo: checkpoint_every must be >= 0");
  if (hidden.empty()) throw ConfigError("ppo: at least one hidden layer");
}

long long PpoConfig::iterations() const {
  return std::max<long long>(1, (total_steps + batch_size() - 1) / batch_size());
}

void save_train_log_csv(const TrainLog& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot open for writing: " + path);
  os << "iteration,steps,mean_return,mean_goal_distance_final,success_rate,policy_loss,"
        "value_loss,entropy\n";
  for (const TrainLogRow& r : log.rows) {
    os << r.iteration << ',' << r.steps << ',' << fmt_g17(r.mean_return) << ','
       << fmt_g17(r.mean_goal_distance_final) << ',' << fmt_g17(r.success_rate) << ','
       << fmt_g17(r.policy_loss) << ',' << fmt_g17(r.value_loss) << ',' << fmt_g17(r.entropy)
       << "\n";
  }
  if (!os) throw RuntimeError("write failed: " + path);
}

Vec2 sample_goal(Vec2 agent_pos, double radius, const MazeSpec& maze, Rng& rng, int* tries_out) {
  if (!(radius > 0.0)) throw ConfigError("sample_goal: radius must be positive");
  for (int t = 1; t <= kGoalSampleTries; ++t) {
    const double rad = radius * std::sqrt(rng.uniform());
    const double ang = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 p{agent_pos.x + rad * std::cos(ang), agent_pos.y + rad * std::sin(ang)};
    if (maze.point_free(p)) {
      if (tries_out) *tries_out = t;
      return p;
    }
  }
  if (tries_out) *tries_out = kGoalSampleTries;
  return agent_pos;
}

void compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                 const std::vector<std::uint8_t>& dones, double gamma, double lambda,
                 std::vector<double>& advantages, std::vector<double>& returns) {
  const std::size_t n = rewards.size();
  if (dones.size() != n || values.size() != n + 1)
    throw ShapeMismatchError("compute_gae: need len(values) == len(rewards)+1 == len(dones)+1");
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double acc = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double mask = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * mask * values[t + 1] - values[t];
    acc = delta + gamma * lambda * mask * acc;
    advantages[t] = acc;
    returns[t] = acc + values[t];
  }
}

namespace {

double gaussian_log_prob(const double* u, const double* mean, const double* log_std, int dim) {
  double lp = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double inv_std = std::exp(-log_std[i]);
    const double z = (u[i] - mean[i]) * inv_std;
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const double* log_std, int dim) {
  double h = 0.0;
  for (int i = 0; i < dim; ++i) h += log_std[i] + 0.5 * (kLog2Pi + 1.0);
  return h;
}

}  // namespace

PpoLossStats ppo_loss(const PolicyParams& actor, const Shapes& critic_shapes,
                      const std::vector<double>& critic_params, const PpoBatch& batch,
                      const std::vector<long long>& indices, const PpoConfig& config,
                      std::vector<double>* actor_grad, std::vector<double>* critic_grad) {
  const int od = batch.obs_dim;
  const int ad = batch.act_dim;
  const double* log_std = actor.log_std();
  const std::size_t log_std_off = actor.flat_weights.size() - ad;

  PpoLossStats stats;
  MlpCache actor_cache, critic_cache;
  std::vector<double> dmean(ad);
  const double inv_n = 1.0 / static_cast<double>(indices.size());

  for (const long long s : indices) {
    const double* obs = batch.obs.data() + s * od;
    const double* u = batch.actions.data() + s * ad;
    const double adv = batch.advantages[s];

    mlp_forward_cached(actor.layer_shapes, actor.net(), obs, actor_cache);
    const std::vector<double>& mean = actor_cache.acts.back();
    const double logp_new = gaussian_log_prob(u, mean.data(), log_std, ad);
    const double ratio = std::exp(logp_new - batch.log_probs[s]);
    const double clipped = std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps);
    const double surr1 = ratio * adv;
    const double surr2 = clipped * adv;
    const bool unclipped_active = surr1 <= surr2;
    stats.policy_loss += -std::min(surr1, surr2);

    const double entropy = gaussian_entropy(log_std, ad);
    stats.entropy += entropy;

    mlp_forward_cached(critic_shapes, critic_params.data(), obs, critic_cache);
    const double v = critic_cache.acts.back()[0];
    const double verr = v - batch.returns[s];
    stats.value_loss += 0.5 * verr * verr;

    if (actor_grad) {
      // dlogp/dmean_i = (u_i - mean_i)/sigma_i^2; dlogp/dlog_std_i = z_i^2 - 1.
      const double dl_dlogp = unclipped_active ? -ratio * adv * inv_n : 0.0;
      for (int i = 0; i < ad; ++i) {
        const double inv_var = std::exp(-2.0 * log_std[i]);
        const double diff = u[i] - mean[i];
        dmean[i] = dl_dlogp * diff * inv_var;
        (*actor_grad)[log_std_off + i] +=
            dl_dlogp * (diff * diff * inv_var - 1.0) - config.entropy_coef * inv_n;
      }
      mlp_backward(actor.layer_shapes, actor.net(), actor_cache, dmean.data(),
                   actor_grad->data());
    }
    if (critic_grad) {
      const double dv = config.value_coef * verr * inv_n;
      mlp_backward(critic_shapes, critic_params.data(), critic_cache, &dv, critic_grad->data());
    }
  }

  stats.policy_loss *= inv_n;
  stats.value_loss *= inv_n;
  stats.entropy *= inv_n;
  stats.total =
      stats.policy_loss + config.value_coef * stats.value_loss - config.entropy_coef * stats.entropy;
  return stats;
}

void AdamState::init(std::size_t n) {
  m.assign(n, 0.0);
  v.assign(n, 0.0);
  t = 0;
}

void AdamState::update(std::vector<double>& params, const std::vector<double>& grad, double lr,
                       double eps) {
  if (params.size() != m.size() || grad.size() != m.size())
    throw ShapeMismatchError("adam: parameter/gradient size mismatch");
  ++t;
  const double b1 = 0.9, b2 = 0.999;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
    v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
    params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

PpoLossStats ppo_update(PolicyParams& actor, const Shapes& critic_shapes,
                        std::vector<double>& critic_params, AdamState& actor_adam,
                        AdamState& critic_adam, PpoBatch& batch, const PpoConfig& config,
                        Rng& rng) {
  const long long n = batch.size();
  if (n == 0) throw RuntimeError("ppo_update: empty batch");

  // Whole-batch advantage normalization.
  double mean = 0.0;
  for (double a : batch.advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : batch.advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : batch.advantages) a = (a - mean) * inv_std;

  std::vector<long long> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> actor_grad(actor.flat_weights.size());
  std::vector<double> critic_grad(critic_params.size());

  PpoLossStats mean_stats;
  int steps = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (long long i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
    for (int mb = 0; mb < config.minibatches; ++mb) {
      const long long lo = n * mb / config.minibatches;
      const long long hi = n * (mb + 1) / config.minibatches;
      if (lo == hi) continue;
      const std::vector<long long> idx(perm.begin() + lo, perm.begin() + hi);

      std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
      const PpoLossStats st = ppo_loss(actor, critic_shapes, critic_params, batch, idx, config,
                                       &actor_grad, &critic_grad);
      if (!std::isfinite(st.total))
        throw RuntimeError("ppo_update: non-finite loss (policy=" +
                           std::to_string(st.policy_loss) +
                           ", value=" + std::to_string(st.value_loss) + ")");

      double norm2 = 0.0;
      for (double g : actor_grad) norm2 += g * g;
      for (double g : critic_grad) norm2 += g * g;
      if (!std::isfinite(norm2)) throw RuntimeError("ppo_update: non-finite gradient");
      const double norm = std::sqrt(norm2);
      if (norm > config.max_grad_norm) {
        const double scale = config.max_grad_norm / norm;
        for (double& g : actor_grad) g *= scale;
        for (double& g : critic_grad) g *= scale;
      }
      actor_adam.update(actor.flat_weights, actor_grad, config.lr, config.adam_eps);
      critic_adam.update(critic_params, critic_grad, config.lr, config.adam_eps);

      mean_stats.policy_loss += st.policy_loss;
      mean_stats.value_loss += st.value_loss;
      mean_stats.entropy += st.entropy;
      mean_stats.total += st.total;
      ++steps;
    }
  }
  if (steps > 0) {
    mean_stats.policy_loss /= steps;
    mean_stats.value_loss /= steps;
    mean_stats.entropy /= steps;
    mean_stats.total /= steps;
  }
  return mean_stats;
}

TrainResult train(const PpoConfig& config, const MazeSpec& maze, const SimParams& sim,
                  const RewardCoeffs& reward, const CheckpointFn& checkpoint) {
  config.validate();
  sim.validate();
  reward.validate();
  maze.validate();

  const int od = GoalObservation::kDim;
  const int ad = 2;
  Rng master(mix64(config.seed, 0xA11CEull));

  PolicyParams actor = PolicyParams::zeros(od, ad, config.hidden);
  {
    std::vector<double> gains(actor.layer_shapes.size(), std::sqrt(2.0));
    gains.back() = 0.01;
    Rng init_rng = master.split(1);
    orthogonal_init(actor.layer_shapes, actor.net(), gains, init_rng);
    for (int i = 0; i < ad; ++i) actor.log_std()[i] = 0.0;
  }
  const Shapes critic_shapes = make_shapes(od, config.hidden, 1);
  std::vector<double> critic(mlp_param_count(critic_shapes), 0.0);
  {
    std::vector<double> gains(critic_shapes.size(), std::sqrt(2.0));
    gains.back() = 1.0;
    Rng init_rng = master.split(2);
    orthogonal_init(critic_shapes, critic.data(), gains, init_rng);
  }

  AdamState actor_adam, critic_adam;
  actor_adam.init(actor.flat_weights.size());
  critic_adam.init(critic.size());
  Rng update_rng = master.split(3);

  const int ne = config.n_envs;
  const int T = config.steps_per_rollout;
  std::vector<Rng> env_rng;
  env_rng.reserve(ne);
  for (int e = 0; e < ne; ++e) env_rng.push_back(master.split(1000 + e));

  std::vector<SimState> states(ne, initial_state(maze));
  std::vector<Vec2> goals(ne);
  std::vector<int> goal_age(ne, 0);
  const double start_heading = maze.start_heading;
  for (int e = 0; e < ne; ++e)
    goals[e] = sample_goal(states[e].position, config.goal_radius, maze, env_rng[e]);

  const long long B = config.batch_size();
  PpoBatch batch;
  batch.obs_dim = od;
  batch.act_dim = ad;
  batch.obs.resize(B * od);
  batch.actions.resize(B * ad);
  batch.log_probs.resize(B);
  batch.advantages.resize(B);
  batch.returns.resize(B);
  std::vector<double> rewards(B), values(B);
  std::vector<std::uint8_t> dones(B);
  std::vector<double> bootstrap(ne);
  std::vector<int> reach_events(ne), end_events(ne);
  std::vector<double> ep_return(ne, 0.0);   // running return of the open goal episode
  std::vector<double> ended_returns(ne);    // summed returns of episodes ended this window

  TrainResult out;
  const long long iters = config.iterations();
  for (long long it = 0; it < iters; ++it) {
    std::fill(reach_events.begin(), reach_events.end(), 0);
    std::fill(end_events.begin(), end_events.end(), 0);
    std::fill(ended_returns.begin(), ended_returns.end(), 0.0);

    for (int t = 0; t < T; ++t) {
      for_each_index(ne, config.threads, [&](std::int64_t e) {
        const long long s = static_cast<long long>(e) * T + t;  // per-env time-major slot
        const GoalObservation gobs = observe(states[e], goals[e]);
        const auto obs = gobs.flat();
        std::copy(obs.begin(), obs.end(), batch.obs.begin() + s * od);

        double mean[2];
        mlp_forward(actor.layer_shapes, actor.net(), obs.data(), mean);
        double u[2];
        for (int i = 0; i < ad; ++i)
          u[i] = mean[i] + std::exp(actor.log_std()[i]) * env_rng[e].normal();
        batch.actions[s * ad] = u[0];
        batch.actions[s * ad + 1] = u[1];
        batch.log_probs[s] = gaussian_log_prob(u, mean, actor.log_std(), ad);

        double v;
        mlp_forward(critic_shapes, critic.data(), obs.data(), &v);
        values[s] = v;

        const Vec2 action{std::tanh(u[0]), std::tanh(u[1])};
        states[e] = step(states[e], action, maze, sim);
        const auto rot = rotation_terms(states[e], start_heading, sim);
        rewards[s] = reward_eq(goals[e] - states[e].position, action, rot[0], rot[1],
                               states[e].omega, reward, /*alive=*/true);
        ep_return[e] += rewards[s];

        bool done = false;
        if (distance(states[e].position, goals[e]) <= config.eps_reach) {
          ++reach_events[e];
          ++end_events[e];
          goals[e] = sample_goal(states[e].position, config.goal_radius, maze, env_rng[e]);
          goal_age[e] = 0;
          done = true;
        } else if (++goal_age[e] >= config.goal_timeout) {
          ++end_events[e];
          goals[e] = sample_goal(states[e].position, config.goal_radius, maze, env_rng[e]);
          goal_age[e] = 0;
          done = true;
        }
        if (done) {
          ended_returns[e] += ep_return[e];
          ep_return[e] = 0.0;
        }
        dones[s] = done ? 1 : 0;
      });
    }

    for_each_index(ne, config.threads, [&](std::int64_t e) {
      const auto obs = observe(states[e], goals[e]).flat();
      double v;
      mlp_forward(critic_shapes, critic.data(), obs.data(), &v);
      bootstrap[e] = v;
    });

    for (int e = 0; e < ne; ++e) {
      const auto base = static_cast<std::size_t>(e) * T;
      std::vector<double> r(rewards.begin() + base, rewards.begin() + base + T);
      std::vector<double> val(values.begin() + base, values.begin() + base + T);
      val.push_back(bootstrap[e]);
      std::vector<std::uint8_t> d(dones.begin() + base, dones.begin() + base + T);
      std::vector<double> adv, ret;
      compute_gae(r, val, d, config.gamma, config.gae_lambda, adv, ret);
      std::copy(adv.begin(), adv.end(), batch.advantages.begin() + base);
      std::copy(ret.begin(), ret.end(), batch.returns.begin() + base);
    }

    PpoLossStats stats;
    try {
      stats = ppo_update(actor, critic_shapes, critic, actor_adam, critic_adam, batch, config,
                         update_rng);
    } catch (const RuntimeError& e) {
      throw RuntimeError("iteration " + std::to_string(it) + ": " + e.what());
    }

    TrainLogRow row;
    row.iteration = static_cast<int>(it);
    row.steps = (it + 1) * B;
    double dist_sum = 0.0, ended_sum = 0.0;
    int reaches = 0, ends = 0;
    for (int e = 0; e < ne; ++e) {
      dist_sum += distance(states[e].position, goals[e]);
      reaches += reach_events[e];
      ends += end_events[e];
      ended_sum += ended_returns[e];
    }
    row.mean_return = ends > 0 ? ended_sum / ends : 0.0;
    row.mean_goal_distance_final = dist_sum / ne;
    row.success_rate = ends > 0 ? static_cast<double>(reaches) / ends : 0.0;
    row.policy_loss = stats.policy_loss;
    row.value_loss = stats.value_loss;
    row.entropy = stats.entropy;
    out.log.rows.push_back(row);

    if (config.checkpoint_every > 0 && checkpoint &&
        (it + 1) % config.checkpoint_every == 0) {
      PolicyParams snapshot = actor;
      checkpoint(static_cast<int>(it),
                 PolicyHandle::neural(std::move(snapshot), ActionMode::kDeterministic));
    }
  }

  out.total_env_steps = iters * B;
  out.policy = PolicyHandle::neural(std::move(actor), ActionMode::kDeterministic);
  return out;
}

}  // namespace qdplan

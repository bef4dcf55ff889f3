#include "qdplan/map_elites.hpp"

#include <cmath>
#include <fstream>

#include "qdplan/csvio.hpp"
#include "qdplan/errors.hpp"
#include "qdplan/parallel.hpp"

namespace qdplan {

void MeConfig::validate() const {
  if (batch_size < 1) throw ConfigError("map_elites: batch_size must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("map_elites: sigma must be positive");
  if (iterations < 0) throw ConfigError("map_elites: iterations must be >= 0");
  if (init_pop < 1) throw ConfigError("map_elites: init_pop must be >= 1");
  if (episode_len < 1) throw ConfigError("map_elites: episode_len must be >= 1");
  if (hidden.empty()) throw ConfigError("map_elites: at least one hidden layer");
}

CandidateEval evaluate_candidate(const PolicyParams& params, const MazeSpec& maze,
                                 const SimParams& sim, const RewardCoeffs& reward,
                                 int episode_len) {
  params.validate();
  const PolicyHandle policy = PolicyHandle::neural(params, ActionMode::kDeterministic);
  Rng unused(0);  // deterministic mode never draws

  CandidateEval out;
  SimState state = initial_state(maze);
  const double start_heading = state.heading;
  for (int t = 0; t < episode_len; ++t) {
    GoalObservation obs = observe(state, state.position);
    obs.p_rel = {0.0, 0.0};  // unconditioned: the goal channel carries nothing
    const Vec2 action = act(policy, obs, unused);
    state = step(state, action, maze, sim);
    const auto rot = rotation_terms(state, start_heading, sim);
    out.objective +=
        reward_eq({0.0, 0.0}, action, rot[0], rot[1], state.omega, reward, /*alive=*/true);
  }
  out.descriptor = state.position;
  return out;
}

PolicyParams mutate_params(const PolicyParams& parent, double sigma, Rng& rng) {
  PolicyParams child = parent;
  for (double& w : child.flat_weights) w += sigma * rng.normal();
  return child;
}

namespace {

PolicyParams random_candidate(int obs_dim, const std::vector<int>& hidden, Rng& rng) {
  PolicyParams p = PolicyParams::zeros(obs_dim, 2, hidden);
  // Full-gain output layer: diverse initial behaviors, unlike the
  // small-output init used when a policy is going to be trained.
  std::vector<double> gains(p.layer_shapes.size(), std::sqrt(2.0));
  orthogonal_init(p.layer_shapes, p.net(), gains, rng);
  return p;
}

struct Pending {
  std::string id;
  PolicyParams params;
  CandidateEval eval;
};

// Insert in candidate order; drop replaced occupants' parameters.
MeStepStats apply_batch(GridArchive& archive, std::map<std::string, PolicyParams>& elites,
                        std::vector<Pending>& batch) {
  MeStepStats stats;
  for (Pending& c : batch) {
    const CellIndex cell = archive.cell_of(c.eval.descriptor);
    const auto& incumbent = archive.at(cell.i, cell.j);
    const std::string replaced = incumbent.has_value() ? incumbent->occupant_id : "";
    if (archive.insert(c.id, c.eval.objective, c.eval.descriptor)) {
      if (!replaced.empty()) elites.erase(replaced);
      elites.emplace(c.id, std::move(c.params));
      ++stats.inserted;
    } else {
      ++stats.rejected;
    }
  }
  return stats;
}

}  // namespace

MeStepStats me_step(GridArchive& archive, std::map<std::string, PolicyParams>& elites,
                    const MeConfig& config, const MazeSpec& maze, const SimParams& sim,
                    const RewardCoeffs& reward, long long iteration, Rng& rng) {
  if (elites.empty()) throw RuntimeError("me_step: archive has no elites to select from");

  // Uniform parent selection; ids are ordered, so draws are reproducible.
  std::vector<const PolicyParams*> parents;
  parents.reserve(elites.size());
  for (const auto& [id, params] : elites) parents.push_back(&params);

  std::vector<Pending> batch(config.batch_size);
  for (int k = 0; k < config.batch_size; ++k) {
    const auto pick = rng.uniform_int(parents.size());
    batch[k].id = "me_" + std::to_string(iteration) + "_" + std::to_string(k);
    batch[k].params = mutate_params(*parents[pick], config.sigma, rng);
  }
  for_each_index(config.batch_size, config.threads, [&](std::int64_t k) {
    batch[k].eval = evaluate_candidate(batch[k].params, maze, sim, reward, config.episode_len);
  });
  return apply_batch(archive, elites, batch);
}

MeResult run_map_elites(const MazeSpec& maze, const SimParams& sim, const RewardCoeffs& reward,
                        const MeConfig& config, int nx, int ny, const ArchiveBounds& bounds) {
  config.validate();
  sim.validate();
  reward.validate();
  maze.validate();

  MeResult res{GridArchive(nx, ny, bounds), {}, {}, 0, 0};
  Rng rng(mix64(config.seed, 0x3E17ull));

  std::vector<Pending> init(config.init_pop);
  for (int k = 0; k < config.init_pop; ++k) {
    init[k].id = "me_init_" + std::to_string(k);
    Rng crng = rng.split(40000 + k);
    init[k].params = random_candidate(GoalObservation::kDim, config.hidden, crng);
  }
  for_each_index(config.init_pop, config.threads, [&](std::int64_t k) {
    init[k].eval = evaluate_candidate(init[k].params, maze, sim, reward, config.episode_len);
  });
  apply_batch(res.archive, res.elites, init);
  res.total_rollouts += config.init_pop;
  res.total_sim_steps += static_cast<long long>(config.init_pop) * config.episode_len;

  const auto log_row = [&](long long iter) {
    const QdMetrics m = res.archive.compute_metrics();
    MeLogRow row;
    row.iteration = iter;
    row.evaluations = res.total_rollouts;
    row.qd_score = m.qd_score;
    row.qd_score_offset = m.qd_score_offset;
    row.coverage = m.coverage;
    row.best = m.best.value_or(0.0);
    res.log.push_back(row);
  };
  log_row(0);

  for (long long it = 1; it <= config.iterations; ++it) {
    me_step(res.archive, res.elites, config, maze, sim, reward, it, rng);
    res.total_rollouts += config.batch_size;
    res.total_sim_steps += static_cast<long long>(config.batch_size) * config.episode_len;
    log_row(it);
  }
  return res;
}

void save_me_log_csv(const std::vector<MeLogRow>& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot open for writing: " + path);
  os << "iteration,evaluations,qd_score,qd_score_offset,coverage,best\n";
  for (const MeLogRow& r : log) {
    os << r.iteration << ',' << r.evaluations << ',' << fmt_g17(r.qd_score) << ','
       << fmt_g17(r.qd_score_offset) << ',' << fmt_g17(r.coverage) << ',' << fmt_g17(r.best)
       << "\n";
  }
  if (!os) throw RuntimeError("write failed: " + path);
}

}  // namespace qdplan

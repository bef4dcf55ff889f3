// Command-line front end: train / plan / baseline / eval / generalize /
// compare. Every command resolves one AppConfig (defaults < config file <
// command line), writes its artifacts under --out, and drops a manifest.json
// recording the resolved config so runs can be reproduced byte for byte.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdplan/archive.hpp"
#include "qdplan/config.hpp"
#include "qdplan/csvio.hpp"
#include "qdplan/errors.hpp"
#include "qdplan/eval.hpp"
#include "qdplan/image.hpp"
#include "qdplan/map_elites.hpp"
#include "qdplan/maze.hpp"
#include "qdplan/planner.hpp"
#include "qdplan/policy.hpp"
#include "qdplan/ppo.hpp"

namespace fs = std::filesystem;
using namespace qdplan;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string default_out;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> maze;
};

void add_common(CLI::App* sub, CommonArgs& args, const std::string& default_out) {
  args.default_out = default_out;
  sub->add_option("--config", args.config_path, "INI config file");
  sub->add_option("--set", args.sets, "override as section.key=value (repeatable)");
  sub->add_option("--out", args.out_dir, "output directory (default: " + default_out + ")");
  sub->add_option("--seed", args.seed, "master seed (run.seed)");
  sub->add_option("--threads", args.threads, "worker threads; 1 is fully deterministic");
  sub->add_option("--maze", args.maze, "maze layout name or grid file");
}

AppConfig build_config(const CommonArgs& args, const std::string& maze_key = "run.maze") {
  KeyValues kv;
  if (!args.config_path.empty()) kv = load_ini(args.config_path);
  for (const std::string& s : args.sets) apply_override(kv, s);
  if (args.out_dir)
    apply_override(kv, "run.out_dir=" + *args.out_dir);
  else if (!kv.count("run") || !kv.at("run").count("out_dir"))
    apply_override(kv, "run.out_dir=" + args.default_out);
  if (args.seed) apply_override(kv, "run.seed=" + std::to_string(*args.seed));
  if (args.threads) apply_override(kv, "run.threads=" + std::to_string(*args.threads));
  if (args.maze) apply_override(kv, maze_key + "=" + *args.maze);
  return AppConfig::from_keyvalues(kv);
}

std::string out_path(const AppConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void ensure_out_dir(const AppConfig& cfg) { fs::create_directories(cfg.out_dir); }

void write_cost_heatmap(const PlanTree& plan, const std::string& path) {
  std::vector<std::optional<double>> values(static_cast<std::size_t>(plan.nx) * plan.ny);
  double hi = 0.0;
  for (int j = 0; j < plan.ny; ++j)
    for (int i = 0; i < plan.nx; ++i) {
      int k = plan.idx(i, j);
      if (plan.status[k] == CellStatus::kSettled) {
        values[k] = plan.cost[k];
        hi = std::max(hi, plan.cost[k]);
      }
    }
  write_grid_heatmap(path, plan.nx, plan.ny, values, 0.0, hi);
}

void write_objective_heatmap(const GridArchive& archive, const std::string& path) {
  std::vector<std::optional<double>> values(static_cast<std::size_t>(archive.total_cells()));
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (int j = 0; j < archive.ny(); ++j)
    for (int i = 0; i < archive.nx(); ++i) {
      const auto& e = archive.at(i, j);
      if (!e) continue;
      values[static_cast<std::size_t>(j) * archive.nx() + i] = e->objective;
      lo = any ? std::min(lo, e->objective) : e->objective;
      hi = any ? std::max(hi, e->objective) : e->objective;
      any = true;
    }
  write_grid_heatmap(path, archive.nx(), archive.ny(), values, lo, hi);
}

// The stored-policy artifact for a run: neural controllers copy their .gcpol
// file, the analytic controller serializes its two gains. Either way exactly
// one file backs every maze the run touches.
std::string store_policy_artifact(const AppConfig& cfg) {
  if (cfg.policy_kind == PolicyKind::kNeural) {
    std::string dst = out_path(cfg, "policy.gcpol");
    fs::copy_file(cfg.policy_file, dst, fs::copy_options::overwrite_existing);
    return dst;
  }
  std::string dst = out_path(cfg, "policy.txt");
  std::ofstream os(dst, std::ios::binary);
  os << "analytic kp=" << fmt_g17(cfg.gains.kp) << " kd=" << fmt_g17(cfg.gains.kd) << "\n";
  return dst;
}

int cmd_train(const AppConfig& cfg) {
  Timer timer;
  ensure_out_dir(cfg);
  MazeSpec maze = cfg.resolve_maze_name(cfg.ppo_maze);
  cfg.sim.validate();
  cfg.reward.validate();

  std::string ckpt_dir = out_path(cfg, "checkpoints");
  CheckpointFn on_checkpoint;
  if (cfg.ppo.checkpoint_every > 0) {
    fs::create_directories(ckpt_dir);
    on_checkpoint = [&](int iteration, const PolicyHandle& policy) {
      save_policy(policy, (fs::path(ckpt_dir) / ("iter_" + std::to_string(iteration) + ".gcpol")).string());
    };
  }

  TrainResult result = train(cfg.ppo, maze, cfg.sim, cfg.reward, on_checkpoint);
  std::string policy_path = out_path(cfg, "policy.gcpol");
  std::string log_path = out_path(cfg, "trainlog.csv");
  save_policy(result.policy, policy_path);
  save_train_log_csv(result.log, log_path);

  ManifestExtra extra;
  extra.add("maze", maze.name);
  extra.add("env_steps", result.total_env_steps);
  extra.add("iterations", static_cast<long long>(result.log.rows.size()));
  if (!result.log.rows.empty())
    extra.add("final_success_rate", fmt_g17(result.log.rows.back().success_rate));
  write_manifest(out_path(cfg, "manifest.json"), "train", cfg, {policy_path, log_path},
                 timer.seconds(), extra);
  std::cout << "trained " << result.total_env_steps << " steps on " << maze.name << " -> "
            << policy_path << "\n";
  return 0;
}

int cmd_plan(const AppConfig& cfg) {
  Timer timer;
  ensure_out_dir(cfg);
  MazeSpec maze = cfg.resolve_maze();
  cfg.sim.validate();
  PolicyHandle policy = cfg.resolve_policy();

  int nx, ny;
  ArchiveBounds bounds;
  cfg.resolve_archive_geometry(maze, nx, ny, bounds);
  GridArchive grid(nx, ny, bounds);
  PlannerConfig pc = cfg.resolve_planner(maze);

  PlanTree tree = plan(maze, cfg.sim, policy, grid, pc, initial_state(maze));

  std::string plan_path = out_path(cfg, "plan.csv");
  std::string heatmap_path = out_path(cfg, "coverage.ppm");
  save_plan_csv(tree, plan_path);
  write_cost_heatmap(tree, heatmap_path);

  ManifestExtra extra;
  extra.add("maze", maze.name);
  extra.add("settled_cells", static_cast<long long>(tree.settled_count()));
  extra.add("coverage", fmt_g17(coverage_of(tree)));
  extra.add("edge_rollouts", tree.edge_rollout_count);
  extra.add("total_sim_steps", tree.total_sim_steps);
  extra.add("directed_edges", directed_edge_count(nx, ny));
  write_manifest(out_path(cfg, "manifest.json"), "plan", cfg, {plan_path, heatmap_path},
                 timer.seconds(), extra);
  std::cout << "plan: " << tree.settled_count() << "/" << nx * ny << " cells settled, "
            << tree.edge_rollout_count << " edge rollouts -> " << plan_path << "\n";
  return 0;
}

int cmd_baseline(const AppConfig& cfg) {
  Timer timer;
  ensure_out_dir(cfg);
  MazeSpec maze = cfg.resolve_maze();
  cfg.sim.validate();
  cfg.reward.validate();

  int nx, ny;
  ArchiveBounds bounds;
  cfg.resolve_archive_geometry(maze, nx, ny, bounds);

  MeConfig me = cfg.map_elites;
  me.episode_len = AppConfig::resolved_eval_episode_len(maze.name, cfg.eval_episode_len);
  MeResult result = run_map_elites(maze, cfg.sim, cfg.reward, me, nx, ny, bounds);

  std::string archive_path = out_path(cfg, "archive.csv");
  std::string log_path = out_path(cfg, "melog.csv");
  std::string heatmap_path = out_path(cfg, "objective.ppm");
  save_archive_csv(result.archive, archive_path);
  save_me_log_csv(result.log, log_path);
  write_objective_heatmap(result.archive, heatmap_path);

  std::string elites_dir = out_path(cfg, "elites");
  fs::create_directories(elites_dir);
  for (const auto& [id, params] : result.elites)
    save_policy(PolicyHandle::neural(params), (fs::path(elites_dir) / (id + ".gcpol")).string());

  ManifestExtra extra;
  extra.add("maze", maze.name);
  extra.add("episode_len", static_cast<long long>(me.episode_len));
  extra.add("occupied_cells", static_cast<long long>(result.archive.occupied_count()));
  extra.add("total_rollouts", result.total_rollouts);
  extra.add("total_sim_steps", result.total_sim_steps);
  write_manifest(out_path(cfg, "manifest.json"), "baseline", cfg,
                 {archive_path, log_path, heatmap_path, elites_dir}, timer.seconds(), extra);
  std::cout << "baseline: " << result.archive.occupied_count() << "/" << nx * ny
            << " cells occupied, budget " << result.total_sim_steps << " sim steps -> "
            << archive_path << "\n";
  return 0;
}

struct EvalArgs {
  std::string plan_path;
  std::string archive_path;
  std::string elites_dir;
  long long rollout_budget = -1;
  long long sim_step_budget = -1;
};

int cmd_eval(const AppConfig& cfg, const EvalArgs& args) {
  Timer timer;
  ensure_out_dir(cfg);
  MazeSpec maze = cfg.resolve_maze();
  cfg.sim.validate();
  EvalProtocol protocol = cfg.resolve_eval(maze);

  const bool have_plan = !args.plan_path.empty();
  const bool have_archive = !args.archive_path.empty();
  if (have_plan == have_archive)
    throw ConfigError("eval needs exactly one of --plan or --archive");

  CorrectedReport report;
  if (have_plan) {
    PlanTree tree = load_plan_csv(args.plan_path);
    if (tree.maze_name != maze.name)
      throw ConfigError("plan was computed on maze '" + tree.maze_name +
                        "' but eval is configured for '" + maze.name + "'");
    PolicyHandle policy = cfg.resolve_policy();
    PlannerConfig pc = cfg.resolve_planner(maze);
    report = corrected_metrics_for_planner(maze, cfg.sim, policy, tree, pc, protocol,
                                           cfg.threads);
  } else {
    if (args.elites_dir.empty()) throw ConfigError("--archive requires --elites <dir>");
    GridArchive archive = load_archive_csv(args.archive_path);
    std::map<std::string, PolicyParams> cache;
    ParamsFetcher fetch = [&](const std::string& id) -> const PolicyParams& {
      auto it = cache.find(id);
      if (it == cache.end()) {
        std::string file = (fs::path(args.elites_dir) / (id + ".gcpol")).string();
        PolicyHandle h = load_policy(file, GoalObservation::kDim);
        it = cache.emplace(id, std::move(h.params)).first;
      }
      return it->second;
    };
    report = corrected_metrics_for_archive(archive, maze, cfg.sim, fetch, protocol, cfg.threads);
  }
  if (args.rollout_budget >= 0) report.rollout_budget = args.rollout_budget;
  if (args.sim_step_budget >= 0) report.sim_step_budget = args.sim_step_budget;

  std::string report_path = out_path(cfg, "report.csv");
  save_report_csv(report, report_path);

  ManifestExtra extra;
  extra.add("method", report.method);
  extra.add("maze", report.maze);
  extra.add("n_reevals", static_cast<long long>(report.n_reevals));
  extra.add("coverage", fmt_g17(report.metrics.coverage));
  extra.add("qd_score", fmt_g17(report.metrics.qd_score));
  if (report.metrics.dem) extra.add("dem", fmt_g17(*report.metrics.dem));
  write_manifest(out_path(cfg, "manifest.json"), "eval", cfg, {report_path}, timer.seconds(),
                 extra);
  std::cout << "eval[" << report.method << "] coverage " << report.metrics.coverage
            << ", qd_score " << report.metrics.qd_score << " -> " << report_path << "\n";
  return 0;
}

int cmd_generalize(const AppConfig& cfg, const std::string& maze_a_name,
                   const std::string& maze_b_name) {
  Timer timer;
  ensure_out_dir(cfg);
  cfg.sim.validate();
  PolicyHandle policy = cfg.resolve_policy();
  std::string stored = store_policy_artifact(cfg);
  long long policy_bytes = static_cast<long long>(fs::file_size(stored));

  auto setup_for = [&](const std::string& name) {
    MazeEvalSetup s;
    s.maze = cfg.resolve_maze_name(name);
    cfg.resolve_archive_geometry(s.maze, s.nx, s.ny, s.bounds);
    s.planner = cfg.resolve_planner(s.maze);
    s.protocol = cfg.resolve_eval(s.maze);
    return s;
  };
  MazeEvalSetup a = setup_for(maze_a_name);
  MazeEvalSetup b = setup_for(maze_b_name);

  GeneralizationResult result = generalization_experiment(policy, policy_bytes, cfg.sim, a, b);

  std::string plan_a = out_path(cfg, "plan_a.csv");
  std::string plan_b = out_path(cfg, "plan_b.csv");
  std::string report_a = out_path(cfg, "report_a.csv");
  std::string report_b = out_path(cfg, "report_b.csv");
  save_plan_csv(result.plan_a, plan_a);
  save_plan_csv(result.plan_b, plan_b);
  save_report_csv(result.report_a, report_a);
  save_report_csv(result.report_b, report_b);
  write_cost_heatmap(result.plan_a, out_path(cfg, "coverage_a.ppm"));
  write_cost_heatmap(result.plan_b, out_path(cfg, "coverage_b.ppm"));

  ManifestExtra extra;
  extra.add("maze_a", a.maze.name);
  extra.add("maze_b", b.maze.name);
  extra.add("stored_policy_files", static_cast<long long>(result.stored_policy_files));
  extra.add("policy_bytes", result.policy_bytes);
  extra.add("rollouts_a", result.plan_a.edge_rollout_count);
  extra.add("rollouts_b", result.plan_b.edge_rollout_count);
  extra.add("directed_edges_a", result.directed_edges_a);
  extra.add("directed_edges_b", result.directed_edges_b);
  extra.add("coverage_a", fmt_g17(result.report_a.metrics.coverage));
  extra.add("coverage_b", fmt_g17(result.report_b.metrics.coverage));
  write_manifest(out_path(cfg, "manifest.json"), "generalize", cfg,
                 {stored, plan_a, plan_b, report_a, report_b}, timer.seconds(), extra);
  std::cout << "generalize: 1 stored policy (" << policy_bytes << " bytes), coverage "
            << a.maze.name << " " << result.report_a.metrics.coverage << ", " << b.maze.name
            << " " << result.report_b.metrics.coverage << "\n";
  return 0;
}

int cmd_compare(const AppConfig& cfg, const std::vector<std::string>& report_paths) {
  Timer timer;
  ensure_out_dir(cfg);
  std::vector<CorrectedReport> reports;
  reports.reserve(report_paths.size());
  for (const std::string& p : report_paths) reports.push_back(load_report_csv(p));

  std::vector<ComparisonRow> rows = compare_methods(reports);
  std::string table_path = out_path(cfg, "comparison.csv");
  save_comparison_csv(rows, table_path);
  std::cout << render_comparison_text(rows);

  ManifestExtra extra;
  extra.add("reports", static_cast<long long>(reports.size()));
  write_manifest(out_path(cfg, "manifest.json"), "compare", cfg, {table_path}, timer.seconds(),
                 extra);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goal-conditioned planning over a behavior-grid archive, with a MAP-Elites "
               "baseline and corrected-metrics evaluation"};
  app.require_subcommand(1);

  CommonArgs train_args, plan_args, baseline_args, eval_args_common, gen_args, compare_args;

  CLI::App* train_cmd = app.add_subcommand("train", "train the goal-conditioned policy");
  add_common(train_cmd, train_args, "runs/train");
  std::optional<long long> total_steps;
  train_cmd->add_option("--total-steps", total_steps, "simulator steps of training");

  CLI::App* plan_cmd = app.add_subcommand("plan", "build the shortest-path tree over the grid");
  add_common(plan_cmd, plan_args, "runs/plan");
  std::string plan_policy;
  bool plan_analytic = false;
  plan_cmd->add_option("--policy", plan_policy, "policy file (.gcpol)");
  plan_cmd->add_flag("--analytic", plan_analytic, "use the built-in pursuit controller");

  CLI::App* baseline_cmd = app.add_subcommand("baseline", "run the MAP-Elites baseline");
  add_common(baseline_cmd, baseline_args, "runs/baseline");
  std::optional<long long> me_iterations;
  std::optional<int> me_batch;
  baseline_cmd->add_option("--iterations", me_iterations, "generations after init");
  baseline_cmd->add_option("--batch-size", me_batch, "children per generation");

  CLI::App* eval_cmd = app.add_subcommand("eval", "corrected metrics via re-evaluation");
  add_common(eval_cmd, eval_args_common, "runs/eval");
  EvalArgs eval_args;
  std::string eval_policy;
  bool eval_analytic = false;
  eval_cmd->add_option("--plan", eval_args.plan_path, "plan.csv to re-execute");
  eval_cmd->add_option("--archive", eval_args.archive_path, "archive.csv to re-evaluate");
  eval_cmd->add_option("--elites", eval_args.elites_dir, "directory of elite .gcpol files");
  eval_cmd->add_option("--policy", eval_policy, "policy file for --plan evals");
  eval_cmd->add_flag("--analytic", eval_analytic, "use the built-in pursuit controller");
  eval_cmd->add_option("--rollout-budget", eval_args.rollout_budget,
                       "record this rollout budget in the report");
  eval_cmd->add_option("--sim-step-budget", eval_args.sim_step_budget,
                       "record this sim-step budget in the report");

  CLI::App* gen_cmd =
      app.add_subcommand("generalize", "plan + eval on two mazes with one stored policy");
  add_common(gen_cmd, gen_args, "runs/generalize");
  std::string gen_policy, maze_a = "trap2d", maze_b = "hardmaze2d";
  bool gen_analytic = false;
  gen_cmd->add_option("--policy", gen_policy, "policy file reused on both mazes");
  gen_cmd->add_flag("--analytic", gen_analytic, "use the built-in pursuit controller");
  gen_cmd->add_option("--maze-a", maze_a, "first maze");
  gen_cmd->add_option("--maze-b", maze_b, "second maze");

  CLI::App* compare_cmd = app.add_subcommand("compare", "tabulate corrected reports");
  add_common(compare_cmd, compare_args, "runs/compare");
  std::vector<std::string> report_paths;
  compare_cmd->add_option("--report", report_paths, "report.csv (repeatable)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a config error
  }

  try {
    if (train_cmd->parsed()) {
      if (total_steps) train_args.sets.push_back("ppo.total_steps=" + std::to_string(*total_steps));
      return cmd_train(build_config(train_args, "ppo.maze"));
    }
    if (plan_cmd->parsed()) {
      if (plan_analytic) plan_args.sets.push_back("policy.kind=analytic");
      if (!plan_policy.empty()) {
        plan_args.sets.push_back("policy.kind=neural");
        plan_args.sets.push_back("policy.file=" + plan_policy);
      }
      return cmd_plan(build_config(plan_args));
    }
    if (baseline_cmd->parsed()) {
      if (me_iterations)
        baseline_args.sets.push_back("map_elites.iterations=" + std::to_string(*me_iterations));
      if (me_batch)
        baseline_args.sets.push_back("map_elites.batch_size=" + std::to_string(*me_batch));
      return cmd_baseline(build_config(baseline_args));
    }
    if (eval_cmd->parsed()) {
      if (eval_analytic) eval_args_common.sets.push_back("policy.kind=analytic");
      if (!eval_policy.empty()) {
        eval_args_common.sets.push_back("policy.kind=neural");
        eval_args_common.sets.push_back("policy.file=" + eval_policy);
      }
      return cmd_eval(build_config(eval_args_common), eval_args);
    }
    if (gen_cmd->parsed()) {
      if (gen_analytic) gen_args.sets.push_back("policy.kind=analytic");
      if (!gen_policy.empty()) {
        gen_args.sets.push_back("policy.kind=neural");
        gen_args.sets.push_back("policy.file=" + gen_policy);
      }
      return cmd_generalize(build_config(gen_args), maze_a, maze_b);
    }
    if (compare_cmd->parsed()) return cmd_compare(build_config(compare_args), report_paths);
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

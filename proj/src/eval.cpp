#include "qdplan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "qdplan/csvio.hpp"
#include "qdplan/errors.hpp"
#include "qdplan/parallel.hpp"
#include "qdplan/rollout.hpp"

namespace qdplan {

void EvalProtocol::validate() const {
  if (n_reevals < 1) throw ConfigError("eval: n_reevals must be >= 1");
  if (episode_len < 1) throw ConfigError("eval: episode_len must be >= 1");
  common_reward.validate();
}

double descriptor_error_mean(const std::vector<Vec2>& achieved, const std::vector<Vec2>& targets) {
  if (achieved.size() != targets.size())
    throw ShapeMismatchError("descriptor_error_mean: size mismatch");
  if (achieved.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < achieved.size(); ++k) sum += distance(achieved[k], targets[k]);
  return sum / static_cast<double>(achieved.size());
}

CorrectedReport corrected_from_evaluations(const std::vector<ReevalCell>& cells, int nx, int ny,
                                           const ArchiveBounds& bounds,
                                           const CellEvaluator& evaluator,
                                           const EvalProtocol& protocol, bool majority_filter,
                                           int threads) {
  protocol.validate();
  CorrectedReport report;
  report.seed = protocol.seed_base;
  report.n_reevals = protocol.n_reevals;
  report.nx = nx;
  report.ny = ny;
  report.bounds = bounds;

  const int k_n = protocol.n_reevals;
  std::vector<ReevalSample> samples(cells.size() * static_cast<std::size_t>(k_n));
  for_each_index(static_cast<std::int64_t>(samples.size()), threads, [&](std::int64_t s) {
    const std::size_t c = static_cast<std::size_t>(s) / k_n;
    const int k = static_cast<int>(s % k_n);
    samples[s] = evaluator(cells[c], k);
  });

  GridArchive corrected(nx, ny, bounds);
  std::map<std::string, Vec2> original_center;
  report.cells.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellOutcome out;
    out.i = cells[c].i;
    out.j = cells[c].j;
    out.occupant_id = cells[c].occupant_id;
    double sum_obj = 0.0;
    Vec2 sum_desc;
    int successes = 0;
    for (int k = 0; k < k_n; ++k) {
      const ReevalSample& s = samples[c * k_n + k];
      sum_obj += s.objective;
      sum_desc = sum_desc + s.descriptor;
      if (s.success) ++successes;
    }
    out.mean_objective = sum_obj / k_n;
    out.mean_descriptor = sum_desc * (1.0 / k_n);
    out.success_rate = static_cast<double>(successes) / k_n;
    report.cells.push_back(out);

    if (majority_filter && !(out.success_rate > kMajorityThreshold)) continue;
    original_center[out.occupant_id] = corrected.cell_center(out.i, out.j);
    corrected.insert(out.occupant_id, out.mean_objective, out.mean_descriptor);
  }

  report.metrics = corrected.compute_metrics();
  // DEM against the original target centers, over the corrected archive.
  std::vector<Vec2> achieved, targets;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const auto& slot = corrected.at(i, j);
      if (!slot.has_value()) continue;
      achieved.push_back(slot->achieved);
      targets.push_back(original_center.at(slot->occupant_id));
    }
  }
  report.metrics.dem =
      achieved.empty() ? std::optional<double>() : descriptor_error_mean(achieved, targets);
  return report;
}

CorrectedReport corrected_metrics_for_archive(const GridArchive& archive, const MazeSpec& maze,
                                              const SimParams& sim, const ParamsFetcher& fetch,
                                              const EvalProtocol& protocol, int threads) {
  std::vector<ReevalCell> cells;
  for (int i = 0; i < archive.nx(); ++i) {
    for (int j = 0; j < archive.ny(); ++j) {
      const auto& slot = archive.at(i, j);
      if (slot.has_value()) cells.push_back({i, j, slot->occupant_id});
    }
  }
  // Resolve occupants up front so a missing policy fails before any rollout.
  std::map<std::string, const PolicyParams*> params;
  for (const ReevalCell& c : cells) params.emplace(c.occupant_id, &fetch(c.occupant_id));

  CellEvaluator evaluator = [&](const ReevalCell& cell, int /*k*/) {
    const CandidateEval ev = evaluate_candidate(*params.at(cell.occupant_id), maze, sim,
                                                protocol.common_reward, protocol.episode_len);
    ReevalSample s;
    s.objective = ev.objective;
    s.descriptor = ev.descriptor;
    const CellIndex landed = archive.cell_of(ev.descriptor);
    s.success = landed.i == cell.i && landed.j == cell.j;
    return s;
  };
  CorrectedReport report =
      corrected_from_evaluations(cells, archive.nx(), archive.ny(), archive.bounds(), evaluator,
                                 protocol, /*majority_filter=*/false, threads);
  report.method = "map_elites";
  report.maze = maze.name;
  return report;
}

CorrectedReport corrected_metrics_for_planner(const MazeSpec& maze, const SimParams& sim,
                                              const PolicyHandle& policy, const PlanTree& plan,
                                              const PlannerConfig& planner_config,
                                              const EvalProtocol& protocol, int threads) {
  std::vector<ReevalCell> cells;
  for (int i = 0; i < plan.nx; ++i) {
    for (int j = 0; j < plan.ny; ++j) {
      if (plan.status[plan.idx(i, j)] == CellStatus::kSettled)
        cells.push_back({i, j, "cell_" + std::to_string(i) + "_" + std::to_string(j)});
    }
  }

  CellEvaluator evaluator = [&](const ReevalCell& cell, int k) {
    const CellIndex target{cell.i, cell.j};
    const Vec2 target_center = plan.cell_center(cell.i, cell.j);
    Rng rng(mix64(protocol.seed_base,
                  static_cast<std::uint64_t>(plan.idx(cell.i, cell.j)),
                  static_cast<std::uint64_t>(k)));
    RolloutResult leg = execute_to_cell(maze, sim, protocol.common_reward, policy, plan, target,
                                        planner_config, rng, protocol.episode_len);
    ReevalSample s;
    s.objective = leg.ret;
    bool success = leg.reached;

    // Hold at the goal for the remainder of the episode; the descriptor is
    // wherever the agent actually is when the episode ends.
    SimState state = leg.final_state;
    const double start_heading = plan.arrival[plan.idx(plan.source.i, plan.source.j)].heading;
    for (int t = leg.steps_used; t < protocol.episode_len; ++t) {
      const GoalObservation obs = observe(state, target_center);
      const Vec2 action = act(policy, obs, rng);
      state = step(state, action, maze, sim);
      const auto rot = rotation_terms(state, start_heading, sim);
      s.objective += reward_eq(target_center - state.position, action, rot[0], rot[1],
                               state.omega, protocol.common_reward, /*alive=*/true);
      if (distance(state.position, target_center) <= planner_config.eps) success = true;
    }
    s.descriptor = state.position;
    s.success = success;
    return s;
  };

  CorrectedReport report = corrected_from_evaluations(
      cells, plan.nx, plan.ny, plan.bounds, evaluator, protocol, /*majority_filter=*/true,
      threads);
  report.method = "planner";
  report.maze = maze.name.empty() ? plan.maze_name : maze.name;
  report.rollout_budget = plan.edge_rollout_count;
  report.sim_step_budget = plan.total_sim_steps;
  return report;
}

GeneralizationResult generalization_experiment(const PolicyHandle& policy, long long policy_bytes,
                                               const SimParams& sim, const MazeEvalSetup& a,
                                               const MazeEvalSetup& b) {
  GeneralizationResult res;
  res.policy_bytes = policy_bytes;

  const auto run = [&](const MazeEvalSetup& setup, PlanTree& plan_out, CorrectedReport& rep_out) {
    GridArchive archive(setup.nx, setup.ny, setup.bounds);
    plan_out = plan(setup.maze, sim, policy, archive, setup.planner, initial_state(setup.maze));
    rep_out = corrected_metrics_for_planner(setup.maze, sim, policy, plan_out, setup.planner,
                                            setup.protocol, setup.planner.threads);
  };
  run(a, res.plan_a, res.report_a);
  run(b, res.plan_b, res.report_b);
  res.directed_edges_a = directed_edge_count(a.nx, a.ny);
  res.directed_edges_b = directed_edge_count(b.nx, b.ny);
  return res;
}

std::vector<ComparisonRow> compare_methods(const std::vector<CorrectedReport>& reports) {
  std::vector<ComparisonRow> rows;
  rows.reserve(reports.size());
  for (const CorrectedReport& r : reports) {
    ComparisonRow row;
    row.method = r.method;
    row.maze = r.maze;
    row.qd_score = r.metrics.qd_score;
    row.qd_score_offset = r.metrics.qd_score_offset;
    row.offset_baseline = r.metrics.offset_baseline;
    row.coverage = r.metrics.coverage;
    row.best = r.metrics.best;
    row.dem = r.metrics.dem;
    row.rollout_budget = r.rollout_budget;
    row.sim_step_budget = r.sim_step_budget;
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(), [](const ComparisonRow& x, const ComparisonRow& y) {
    if (x.method != y.method) return x.method < y.method;
    return x.maze < y.maze;
  });
  return rows;
}

namespace {

std::string opt_field(const std::optional<double>& v) { return v ? fmt_g17(*v) : "none"; }

std::optional<double> parse_opt(const std::string& s) {
  if (s == "none") return std::nullopt;
  return parse_double(s);
}

}  // namespace

void save_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot open for writing: " + path);
  os << "method,maze,qd_score,qd_score_offset,offset_baseline,coverage,best,dem,rollout_budget,"
        "sim_step_budget\n";
  for (const ComparisonRow& r : rows) {
    os << r.method << ',' << r.maze << ',' << fmt_g17(r.qd_score) << ','
       << fmt_g17(r.qd_score_offset) << ',' << opt_field(r.offset_baseline) << ','
       << fmt_g17(r.coverage) << ',' << opt_field(r.best) << ',' << opt_field(r.dem) << ','
       << r.rollout_budget << ',' << r.sim_step_budget << "\n";
  }
  if (!os) throw RuntimeError("write failed: " + path);
}

std::string render_comparison_text(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "method        maze         coverage%   qd_score       qd_offset      best         dem        rollouts     sim_steps\n";
  for (const ComparisonRow& r : rows) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-13s %-12s %9.2f   %-14.6g %-14.6g %-12.6g %-10.4g %-12lld %-12lld\n",
                  r.method.c_str(), r.maze.c_str(), 100.0 * r.coverage, r.qd_score,
                  r.qd_score_offset, r.best.value_or(0.0), r.dem.value_or(0.0), r.rollout_budget,
                  r.sim_step_budget);
    os << line;
  }
  return os.str();
}

void save_report_csv(const CorrectedReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot open for writing: " + path);
  os << "# corrected_report v1\n";
  os << "method," << report.method << "\n";
  os << "maze," << report.maze << "\n";
  os << "seed," << report.seed << "\n";
  os << "n_reevals," << report.n_reevals << "\n";
  os << "nx," << report.nx << "\n";
  os << "ny," << report.ny << "\n";
  os << "bounds," << fmt_g17(report.bounds.x_lo) << ',' << fmt_g17(report.bounds.x_hi) << ','
     << fmt_g17(report.bounds.y_lo) << ',' << fmt_g17(report.bounds.y_hi) << "\n";
  os << "rollout_budget," << report.rollout_budget << "\n";
  os << "sim_step_budget," << report.sim_step_budget << "\n";
  os << "qd_score," << fmt_g17(report.metrics.qd_score) << "\n";
  os << "qd_score_offset," << fmt_g17(report.metrics.qd_score_offset) << "\n";
  os << "offset_baseline," << opt_field(report.metrics.offset_baseline) << "\n";
  os << "coverage," << fmt_g17(report.metrics.coverage) << "\n";
  os << "best," << opt_field(report.metrics.best) << "\n";
  os << "dem," << opt_field(report.metrics.dem) << "\n";
  os << "cell,i,j,success_rate,mean_objective,mean_x,mean_y,occupant_id\n";
  for (const CellOutcome& c : report.cells) {
    os << "cell," << c.i << ',' << c.j << ',' << fmt_g17(c.success_rate) << ','
       << fmt_g17(c.mean_objective) << ',' << fmt_g17(c.mean_descriptor.x) << ','
       << fmt_g17(c.mean_descriptor.y) << ',' << c.occupant_id << "\n";
  }
  if (!os) throw RuntimeError("write failed: " + path);
}

namespace {

std::string expect_kv(std::istream& is, const std::string& key, const std::string& path) {
  std::string line;
  if (!std::getline(is, line)) throw CorruptFileError("report truncated at " + key + ": " + path);
  const std::string prefix = key + ",";
  if (line.rfind(prefix, 0) != 0)
    throw CorruptFileError("report missing field " + key + ": " + path);
  return line.substr(prefix.size());
}

}  // namespace

CorrectedReport load_report_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CorruptFileError("cannot open report: " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("# corrected_report", 0) != 0)
    throw CorruptFileError("not a corrected report: " + path);

  CorrectedReport r;
  r.method = expect_kv(is, "method", path);
  r.maze = expect_kv(is, "maze", path);
  r.seed = static_cast<std::uint64_t>(parse_int(expect_kv(is, "seed", path)));
  r.n_reevals = static_cast<int>(parse_int(expect_kv(is, "n_reevals", path)));
  r.nx = static_cast<int>(parse_int(expect_kv(is, "nx", path)));
  r.ny = static_cast<int>(parse_int(expect_kv(is, "ny", path)));
  const auto bf = split_csv_line(expect_kv(is, "bounds", path));
  if (bf.size() != 4) throw CorruptFileError("report malformed bounds: " + path);
  r.bounds = {parse_double(bf[0]), parse_double(bf[1]), parse_double(bf[2]), parse_double(bf[3])};
  r.rollout_budget = parse_int(expect_kv(is, "rollout_budget", path));
  r.sim_step_budget = parse_int(expect_kv(is, "sim_step_budget", path));
  r.metrics.qd_score = parse_double(expect_kv(is, "qd_score", path));
  r.metrics.qd_score_offset = parse_double(expect_kv(is, "qd_score_offset", path));
  r.metrics.offset_baseline = parse_opt(expect_kv(is, "offset_baseline", path));
  r.metrics.coverage = parse_double(expect_kv(is, "coverage", path));
  r.metrics.best = parse_opt(expect_kv(is, "best", path));
  r.metrics.dem = parse_opt(expect_kv(is, "dem", path));

  if (!std::getline(is, line) || line.rfind("cell,i,j", 0) != 0)
    throw CorruptFileError("report missing cell header: " + path);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8 || f[0] != "cell")
      throw CorruptFileError("report malformed cell row: " + path);
    CellOutcome c;
    c.i = static_cast<int>(parse_int(f[1]));
    c.j = static_cast<int>(parse_int(f[2]));
    c.success_rate = parse_double(f[3]);
    c.mean_objective = parse_double(f[4]);
    c.mean_descriptor = {parse_double(f[5]), parse_double(f[6])};
    c.occupant_id = f[7];
    r.cells.push_back(c);
  }
  return r;
}

}  // namespace qdplan

#include "qdplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <tuple>
#include <unordered_map>

#include "qdplan/csvio.hpp"
#include "qdplan/errors.hpp"
#include "qdplan/parallel.hpp"

namespace qdplan {

void PlannerConfig::validate() const {
  if (!(eps > 0.0)) throw ConfigError("planner: eps must be positive");
  if (max_steps_per_edge <= 0) throw ConfigError("planner: max_steps_per_edge must be positive");
  if (revalidation_retries < 0) throw ConfigError("planner: revalidation_retries must be >= 0");
}

int PlanTree::settled_count() const {
  return static_cast<int>(std::count(status.begin(), status.end(), CellStatus::kSettled));
}

Vec2 PlanTree::cell_center(int i, int j) const {
  const double cw = (bounds.x_hi - bounds.x_lo) / nx;
  const double ch = (bounds.y_hi - bounds.y_lo) / ny;
  return {bounds.x_lo + (i + 0.5) * cw, bounds.y_lo + (j + 0.5) * ch};
}

namespace {

// Fixed relaxation order; also the order used for deterministic result
// application when frontier rollouts run in parallel.
constexpr int kNeighborOffsets[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                        {0, 1},   {1, -1}, {1, 0},  {1, 1}};

}  // namespace

PlanTree plan_with_validator(int nx, int ny, const ArchiveBounds& bounds, CellIndex source_cell,
                             const SimState& start, const EdgeValidator& validator,
                             const PlannerConfig& config, const std::string& maze_name) {
  config.validate();
  if (nx <= 0 || ny <= 0) throw ConfigError("planner: grid resolution must be positive");
  if (source_cell.i < 0 || source_cell.i >= nx || source_cell.j < 0 || source_cell.j >= ny ||
      !source_cell.in_bounds)
    throw ConfigError("planner: start cell out of bounds");

  PlanTree tree;
  tree.nx = nx;
  tree.ny = ny;
  tree.bounds = bounds;
  tree.source = source_cell;
  tree.maze_name = maze_name;
  const int n = nx * ny;
  tree.status.assign(n, CellStatus::kUnreachable);
  tree.cost.assign(n, kInfCost);
  tree.pred.assign(n, CellIndex{-1, -1});
  tree.arrival.assign(n, SimState{});
  tree.steps_used.assign(n, 0);

  const int src = tree.idx(source_cell.i, source_cell.j);
  tree.cost[src] = 0.0;
  tree.arrival[src] = start;

  std::vector<std::uint8_t> settled(n, 0);
  std::vector<std::uint8_t> attempted(static_cast<std::size_t>(n) * 8, 0);

  using QItem = std::tuple<double, int, int>;  // cost, i, j — lexicographic tie-break
  std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> pq;
  pq.emplace(0.0, source_cell.i, source_cell.j);

  struct Candidate {
    int slot = 0;  // neighbor slot, for the attempted bitmap
    CellIndex v;
    double tentative = kInfCost;  // euclidean mode: cost[u] + w(u,v)
    EdgeOutcome outcome;
  };

  while (!pq.empty()) {
    const auto [ucost, ui, uj] = pq.top();
    pq.pop();
    const int u = tree.idx(ui, uj);
    if (settled[u]) continue;
    settled[u] = 1;
    tree.status[u] = CellStatus::kSettled;
    if (u != src) {
      const double err = distance(tree.arrival[u].position, tree.cell_center(ui, uj));
      if (err > config.eps)
        throw RuntimeError("planner: settled arrival state violates eps at cell (" +
                           std::to_string(ui) + "," + std::to_string(uj) + ")");
    }

    const Vec2 ucenter = tree.cell_center(ui, uj);
    std::vector<Candidate> cands;
    cands.reserve(8);
    for (int s = 0; s < 8; ++s) {
      const int vi = ui + kNeighborOffsets[s][0];
      const int vj = uj + kNeighborOffsets[s][1];
      if (vi < 0 || vi >= nx || vj < 0 || vj >= ny) continue;
      const int v = tree.idx(vi, vj);
      if (settled[v]) continue;
      if (attempted[static_cast<std::size_t>(u) * 8 + s]) continue;
      Candidate c;
      c.slot = s;
      c.v = CellIndex{vi, vj};
      if (config.weight_mode == EdgeWeightMode::kEuclidean) {
        c.tentative = tree.cost[u] + distance(ucenter, tree.cell_center(vi, vj));
        // A rollout that cannot improve the head's tentative cost is skipped;
        // the head already has a cheaper-or-equal way in.
        if (!(c.tentative < tree.cost[v])) continue;
      }
      attempted[static_cast<std::size_t>(u) * 8 + s] = 1;
      cands.push_back(c);
    }

    // Candidates target pairwise-distinct head cells, so validating them in
    // parallel and applying in slot order matches the serial result exactly.
    const SimState from_state = tree.arrival[u];
    const CellIndex from_cell{ui, uj};
    for_each_index(cands.size(), config.threads, [&](std::size_t k) {
      Candidate& c = cands[k];
      c.outcome = validator(from_cell, c.v, from_state);
      for (int retry = 0; retry < config.revalidation_retries && !c.outcome.ok; ++retry) {
        const EdgeOutcome again = validator(from_cell, c.v, from_state);
        c.outcome.steps_used += again.steps_used;
        if (again.ok) {
          c.outcome.ok = true;
          c.outcome.arrival = again.arrival;
        }
      }
    });

    for (const Candidate& c : cands) {
      ++tree.edge_rollout_count;
      tree.total_sim_steps += c.outcome.steps_used;
      if (!c.outcome.ok) continue;
      const int v = tree.idx(c.v.i, c.v.j);
      double tentative = c.tentative;
      if (config.weight_mode == EdgeWeightMode::kStepCount)
        tentative = tree.cost[u] + c.outcome.steps_used;
      if (tentative < tree.cost[v]) {
        tree.cost[v] = tentative;
        tree.pred[v] = CellIndex{ui, uj};
        tree.arrival[v] = c.outcome.arrival;
        tree.steps_used[v] = c.outcome.steps_used;
        pq.emplace(tentative, c.v.i, c.v.j);
      }
    }
  }

  for (int c = 0; c < n; ++c) {
    if (!settled[c]) {
      tree.cost[c] = kInfCost;
      tree.pred[c] = CellIndex{-1, -1};
    }
  }
  return tree;
}

// Per-directed-edge rng streams so retries and thread counts cannot perturb
// one another; deterministic policies never touch them.
PlanTree plan(const MazeSpec& maze, const SimParams& sim, const PolicyHandle& policy,
              const GridArchive& archive, const PlannerConfig& config, const SimState& start) {
  config.validate();
  const CellIndex source = archive.cell_of(start.position);
  if (!source.in_bounds) throw ConfigError("planner: start cell out of bounds");

  const RewardCoeffs reward;  // planning ignores rollout returns
  RolloutOptions opts;
  opts.max_steps = config.max_steps_per_edge;
  opts.eps = config.eps;

  std::unordered_map<long long, int> attempts;  // retries re-roll a fresh stream per (edge, try)
  const int nx = archive.nx();
  EdgeValidator validator = [&maze, &sim, policy, opts, reward, seed = config.seed, nx, &attempts,
                             &archive](CellIndex from, CellIndex to, const SimState& from_state) {
    const long long from_idx = static_cast<long long>(from.j) * nx + from.i;
    const long long to_idx = static_cast<long long>(to.j) * nx + to.i;
    const long long key = from_idx * static_cast<long long>(archive.total_cells()) + to_idx;
    const int attempt = attempts[key]++;
    Rng rng(mix64(seed, static_cast<std::uint64_t>(key), static_cast<std::uint64_t>(attempt)));
    const RolloutResult r = rollout_to_goal(maze, sim, reward, policy, from_state,
                                            archive.cell_center(to.i, to.j), opts, rng);
    return EdgeOutcome{r.reached, r.final_state, r.steps_used};
  };

  return plan_with_validator(archive.nx(), archive.ny(), archive.bounds(), source, start,
                             validator, config, maze.name);
}

RolloutResult execute_to_cell(const MazeSpec& maze, const SimParams& sim,
                              const RewardCoeffs& reward, const PolicyHandle& policy,
                              const PlanTree& plan, CellIndex target,
                              const PlannerConfig& config, Rng& rng, long long max_total_steps) {
  if (target.i < 0 || target.i >= plan.nx || target.j < 0 || target.j >= plan.ny)
    throw UnreachableCellError("execute_to_cell: target index out of range");
  if (!plan.settled(target))
    throw UnreachableCellError("execute_to_cell: target cell was not settled by the plan");

  // Predecessor chain, source first.
  std::vector<CellIndex> chain;
  for (CellIndex c = target; !(c.i == plan.source.i && c.j == plan.source.j);
       c = plan.pred[plan.idx(c.i, c.j)])
    chain.push_back(c);
  std::reverse(chain.begin(), chain.end());

  const Vec2 target_center = plan.cell_center(target.i, target.j);
  const int src = plan.idx(plan.source.i, plan.source.j);

  RolloutResult res;
  SimState state = plan.arrival[src];
  const double start_heading = state.heading;
  res.final_state = state;

  long long total = 0;
  for (const CellIndex& leg : chain) {
    const Vec2 leg_goal = plan.cell_center(leg.i, leg.j);
    for (int t = 0; t < config.max_steps_per_edge; ++t) {
      if (distance(state.position, leg_goal) <= config.eps) break;
      if (max_total_steps >= 0 && total >= max_total_steps) break;
      const GoalObservation obs = observe(state, leg_goal);
      const Vec2 action = act(policy, obs, rng);
      state = step(state, action, maze, sim);
      const auto rot = rotation_terms(state, start_heading, sim);
      res.ret += reward_eq(target_center - state.position, action, rot[0], rot[1], state.omega,
                           reward, /*alive=*/true);
      ++total;
    }
    if (max_total_steps >= 0 && total >= max_total_steps) break;
  }

  res.final_state = state;
  res.steps_used = static_cast<int>(total);
  res.reached = distance(state.position, target_center) <= config.eps;
  return res;
}

double coverage_of(const PlanTree& plan) {
  return static_cast<double>(plan.settled_count()) / (static_cast<double>(plan.nx) * plan.ny);
}

std::vector<GraphEdge> graph_edges(int nx, int ny, const ArchiveBounds& bounds) {
  const double cw = (bounds.x_hi - bounds.x_lo) / nx;
  const double ch = (bounds.y_hi - bounds.y_lo) / ny;
  const auto center = [&](int i, int j) {
    return Vec2{bounds.x_lo + (i + 0.5) * cw, bounds.y_lo + (j + 0.5) * ch};
  };
  std::vector<GraphEdge> edges;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      for (const auto& off : kNeighborOffsets) {
        const int bi = i + off[0];
        const int bj = j + off[1];
        if (bi < 0 || bi >= nx || bj < 0 || bj >= ny) continue;
        if (bi < i || (bi == i && bj <= j)) continue;  // emit each pair once, a < b
        edges.push_back({CellIndex{i, j}, CellIndex{bi, bj}, distance(center(i, j), center(bi, bj))});
      }
    }
  }
  return edges;
}

long long directed_edge_count(int nx, int ny) {
  const long long horizontal = static_cast<long long>(nx - 1) * ny;
  const long long vertical = static_cast<long long>(ny - 1) * nx;
  const long long diagonal = 2LL * (nx - 1) * (ny - 1);
  return 2 * (horizontal + vertical + diagonal);
}

void save_plan_csv(const PlanTree& plan, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot open for writing: " + path);
  const SimState& s0 = plan.arrival[plan.idx(plan.source.i, plan.source.j)];
  os << "# plan_tree v1\n";
  os << "# maze=" << plan.maze_name << "\n";
  os << "# nx=" << plan.nx << " ny=" << plan.ny << " x_lo=" << fmt_g17(plan.bounds.x_lo)
     << " x_hi=" << fmt_g17(plan.bounds.x_hi) << " y_lo=" << fmt_g17(plan.bounds.y_lo)
     << " y_hi=" << fmt_g17(plan.bounds.y_hi) << "\n";
  os << "# source_i=" << plan.source.i << " source_j=" << plan.source.j << "\n";
  os << "# start=" << fmt_g17(s0.position.x) << ',' << fmt_g17(s0.position.y) << ','
     << fmt_g17(s0.heading) << ',' << fmt_g17(s0.velocity.x) << ',' << fmt_g17(s0.velocity.y)
     << ',' << fmt_g17(s0.omega) << "\n";
  os << "# edge_rollouts=" << plan.edge_rollout_count
     << " total_sim_steps=" << plan.total_sim_steps << "\n";
  os << "i,j,status,cost,pred_i,pred_j,steps_used\n";
  for (int j = 0; j < plan.ny; ++j) {
    for (int i = 0; i < plan.nx; ++i) {
      const int c = plan.idx(i, j);
      const bool settled = plan.status[c] == CellStatus::kSettled;
      os << i << ',' << j << ',' << (settled ? "settled" : "unreachable") << ','
         << (settled ? fmt_g17(plan.cost[c]) : std::string("inf")) << ',' << plan.pred[c].i << ','
         << plan.pred[c].j << ',' << plan.steps_used[c] << "\n";
    }
  }
  if (!os) throw RuntimeError("write failed: " + path);
}

namespace {

std::string plan_header_field(const std::string& line, const std::string& key,
                              const std::string& path) {
  const std::string needle = key + "=";
  const auto pos = line.find(needle);
  if (pos == std::string::npos) throw CorruptFileError("plan csv missing " + key + ": " + path);
  const auto start = pos + needle.size();
  auto end = line.find(' ', start);
  if (end == std::string::npos) end = line.size();
  return line.substr(start, end - start);
}

}  // namespace

PlanTree load_plan_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CorruptFileError("cannot open plan csv: " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("# plan_tree", 0) != 0)
    throw CorruptFileError("not a plan csv: " + path);

  PlanTree plan;
  if (!std::getline(is, line) || line.rfind("# maze=", 0) != 0)
    throw CorruptFileError("plan csv missing maze header: " + path);
  plan.maze_name = line.substr(7);

  if (!std::getline(is, line)) throw CorruptFileError("plan csv truncated: " + path);
  plan.nx = parse_int(plan_header_field(line, "nx", path));
  plan.ny = parse_int(plan_header_field(line, "ny", path));
  plan.bounds.x_lo = parse_double(plan_header_field(line, "x_lo", path));
  plan.bounds.x_hi = parse_double(plan_header_field(line, "x_hi", path));
  plan.bounds.y_lo = parse_double(plan_header_field(line, "y_lo", path));
  plan.bounds.y_hi = parse_double(plan_header_field(line, "y_hi", path));
  if (plan.nx <= 0 || plan.ny <= 0) throw CorruptFileError("plan csv bad resolution: " + path);

  if (!std::getline(is, line)) throw CorruptFileError("plan csv truncated: " + path);
  plan.source.i = parse_int(plan_header_field(line, "source_i", path));
  plan.source.j = parse_int(plan_header_field(line, "source_j", path));

  if (!std::getline(is, line) || line.rfind("# start=", 0) != 0)
    throw CorruptFileError("plan csv missing start header: " + path);
  const auto sf = split_csv_line(line.substr(8));
  if (sf.size() != 6) throw CorruptFileError("plan csv malformed start state: " + path);
  SimState s0;
  s0.position = {parse_double(sf[0]), parse_double(sf[1])};
  s0.heading = parse_double(sf[2]);
  s0.velocity = {parse_double(sf[3]), parse_double(sf[4])};
  s0.omega = parse_double(sf[5]);

  if (!std::getline(is, line)) throw CorruptFileError("plan csv truncated: " + path);
  plan.edge_rollout_count = parse_int(plan_header_field(line, "edge_rollouts", path));
  plan.total_sim_steps = parse_int(plan_header_field(line, "total_sim_steps", path));

  if (!std::getline(is, line) || line.rfind("i,j,status", 0) != 0)
    throw CorruptFileError("plan csv missing column header: " + path);

  const int n = plan.nx * plan.ny;
  plan.status.assign(n, CellStatus::kUnreachable);
  plan.cost.assign(n, kInfCost);
  plan.pred.assign(n, CellIndex{-1, -1});
  plan.arrival.assign(n, SimState{});
  plan.steps_used.assign(n, 0);
  plan.arrival[plan.idx(plan.source.i, plan.source.j)] = s0;

  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw CorruptFileError("plan csv malformed row: " + path);
    const int i = parse_int(f[0]);
    const int j = parse_int(f[1]);
    if (i < 0 || i >= plan.nx || j < 0 || j >= plan.ny)
      throw CorruptFileError("plan csv cell out of range: " + path);
    const int c = plan.idx(i, j);
    if (f[2] == "settled") {
      plan.status[c] = CellStatus::kSettled;
      plan.cost[c] = parse_double(f[3]);
    } else if (f[2] == "unreachable") {
      plan.status[c] = CellStatus::kUnreachable;
      plan.cost[c] = kInfCost;
    } else {
      throw CorruptFileError("plan csv unknown status: " + path);
    }
    plan.pred[c] = CellIndex{static_cast<int>(parse_int(f[4])), static_cast<int>(parse_int(f[5]))};
    plan.steps_used[c] = static_cast<int>(parse_int(f[6]));
    ++rows;
  }
  if (rows != n) throw CorruptFileError("plan csv row count does not match grid: " + path);
  return plan;
}

}  // namespace qdplan

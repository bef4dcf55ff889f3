#include "qdplan/config.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qdplan/csvio.hpp"
#include "qdplan/errors.hpp"

namespace qdplan {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  std::size_t cut = line.size();
  for (char marker : {'#', ';'}) {
    std::size_t p = line.find(marker);
    if (p < cut) cut = p;
  }
  return line.substr(0, cut);
}

std::vector<int> parse_int_list(const std::string& raw, const std::string& where) {
  std::vector<int> out;
  std::string item;
  std::istringstream is(raw);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty entry in integer list for " + where);
    out.push_back(static_cast<int>(parse_int(item)));
  }
  return out;
}

std::string join_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

double cfg_double(const std::string& raw, const std::string& where) {
  try {
    return parse_double(raw);
  } catch (const std::exception&) {
    throw ConfigError("expected a number for " + where + ", got '" + raw + "'");
  }
}

long long cfg_int(const std::string& raw, const std::string& where) {
  try {
    return parse_int(raw);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer for " + where + ", got '" + raw + "'");
  }
}

std::uint64_t cfg_u64(const std::string& raw, const std::string& where) {
  long long v = cfg_int(raw, where);
  if (v < 0) throw ConfigError("expected a non-negative integer for " + where);
  return static_cast<std::uint64_t>(v);
}

}  // namespace

KeyValues parse_ini(const std::string& text) {
  KeyValues kv;
  std::string section;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError("malformed section header at line " + std::to_string(lineno) + ": " + line);
      section = trim(line.substr(1, line.size() - 2));
      kv.try_emplace(section);
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(lineno) + ": " + line);
    if (section.empty())
      throw ConfigError("key outside any [section] at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    kv[section][key] = value;
  }
  return kv;
}

KeyValues load_ini(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_ini(buf.str());
}

void apply_override(KeyValues& kv, const std::string& spec) {
  std::size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value, got '" + spec + "'");
  std::string path = trim(spec.substr(0, eq));
  std::string value = trim(spec.substr(eq + 1));
  std::size_t dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
    throw ConfigError("override must look like section.key=value, got '" + spec + "'");
  kv[path.substr(0, dot)][path.substr(dot + 1)] = value;
}

AppConfig AppConfig::from_keyvalues(const KeyValues& kv) {
  AppConfig c;

  // The run seed is the master stream: module seeds default to it and only an
  // explicit per-section seed overrides.
  if (auto run = kv.find("run"); run != kv.end()) {
    if (auto s = run->second.find("seed"); s != run->second.end())
      c.seed = cfg_u64(s->second, "run.seed");
  }
  c.planner.seed = c.seed;
  c.ppo.seed = c.seed;
  c.map_elites.seed = c.seed;

  for (const auto& [section, keys] : kv) {
    for (const auto& [key, raw] : keys) {
      const std::string where = section + "." + key;
      bool known = true;
      if (section == "run") {
        if (key == "maze") c.maze = raw;
        else if (key == "out_dir") c.out_dir = raw;
        else if (key == "seed") c.seed = cfg_u64(raw, where);
        else if (key == "threads") c.threads = static_cast<int>(cfg_int(raw, where));
        else known = false;
      } else if (section == "sim") {
        if (key == "dt") c.sim.dt = cfg_double(raw, where);
        else if (key == "mass") c.sim.mass = cfg_double(raw, where);
        else if (key == "lin_damping") c.sim.lin_damping = cfg_double(raw, where);
        else if (key == "ang_damping") c.sim.ang_damping = cfg_double(raw, where);
        else if (key == "force_scale") c.sim.force_scale = cfg_double(raw, where);
        else if (key == "rotation_penalty") {
          if (raw == "none") c.sim.rotation_penalty = RotationPenalty::kNone;
          else if (raw == "heading_excursion") c.sim.rotation_penalty = RotationPenalty::kHeadingExcursion;
          else throw ConfigError(where + " must be none or heading_excursion, got '" + raw + "'");
        } else known = false;
      } else if (section == "reward") {
        if (key == "c_g") c.reward.c_g = cfg_double(raw, where);
        else if (key == "c_a") c.reward.c_a = cfg_double(raw, where);
        else if (key == "c_r") c.reward.c_r = cfg_double(raw, where);
        else if (key == "c_omega") c.reward.c_omega = cfg_double(raw, where);
        else if (key == "c_alive") c.reward.c_alive = cfg_double(raw, where);
        else if (key == "r_alive") c.reward.r_alive = cfg_double(raw, where);
        else known = false;
      } else if (section == "archive") {
        if (key == "nx") c.archive_nx = static_cast<int>(cfg_int(raw, where));
        else if (key == "ny") c.archive_ny = static_cast<int>(cfg_int(raw, where));
        else if (key == "x_lo") c.archive_bounds.x_lo = cfg_double(raw, where);
        else if (key == "x_hi") c.archive_bounds.x_hi = cfg_double(raw, where);
        else if (key == "y_lo") c.archive_bounds.y_lo = cfg_double(raw, where);
        else if (key == "y_hi") c.archive_bounds.y_hi = cfg_double(raw, where);
        else known = false;
      } else if (section == "planner") {
        if (key == "eps") c.planner.eps = cfg_double(raw, where);
        else if (key == "max_steps_per_edge") c.planner.max_steps_per_edge = static_cast<int>(cfg_int(raw, where));
        else if (key == "seed") c.planner.seed = cfg_u64(raw, where);
        else if (key == "revalidation_retries") c.planner.revalidation_retries = static_cast<int>(cfg_int(raw, where));
        else if (key == "weight_mode") {
          if (raw == "euclidean") c.planner.weight_mode = EdgeWeightMode::kEuclidean;
          else if (raw == "steps") c.planner.weight_mode = EdgeWeightMode::kStepCount;
          else throw ConfigError(where + " must be euclidean or steps, got '" + raw + "'");
        } else known = false;
      } else if (section == "policy") {
        if (key == "kind") {
          if (raw == "analytic") c.policy_kind = PolicyKind::kAnalytic;
          else if (raw == "neural") c.policy_kind = PolicyKind::kNeural;
          else throw ConfigError(where + " must be analytic or neural, got '" + raw + "'");
        } else if (key == "file") c.policy_file = raw;
        else if (key == "kp") c.gains.kp = cfg_double(raw, where);
        else if (key == "kd") c.gains.kd = cfg_double(raw, where);
        else if (key == "action_mode") {
          if (raw == "deterministic") c.action_mode = ActionMode::kDeterministic;
          else if (raw == "stochastic") c.action_mode = ActionMode::kStochastic;
          else throw ConfigError(where + " must be deterministic or stochastic, got '" + raw + "'");
        } else known = false;
      } else if (section == "ppo") {
        if (key == "maze") c.ppo_maze = raw;
        else if (key == "goal_radius") c.ppo.goal_radius = cfg_double(raw, where);
        else if (key == "n_envs") c.ppo.n_envs = static_cast<int>(cfg_int(raw, where));
        else if (key == "steps_per_rollout") c.ppo.steps_per_rollout = static_cast<int>(cfg_int(raw, where));
        else if (key == "total_steps") c.ppo.total_steps = cfg_int(raw, where);
        else if (key == "lr") c.ppo.lr = cfg_double(raw, where);
        else if (key == "clip_eps") c.ppo.clip_eps = cfg_double(raw, where);
        else if (key == "gamma") c.ppo.gamma = cfg_double(raw, where);
        else if (key == "gae_lambda") c.ppo.gae_lambda = cfg_double(raw, where);
        else if (key == "epochs") c.ppo.epochs = static_cast<int>(cfg_int(raw, where));
        else if (key == "minibatches") c.ppo.minibatches = static_cast<int>(cfg_int(raw, where));
        else if (key == "entropy_coef") c.ppo.entropy_coef = cfg_double(raw, where);
        else if (key == "value_coef") c.ppo.value_coef = cfg_double(raw, where);
        else if (key == "max_grad_norm") c.ppo.max_grad_norm = cfg_double(raw, where);
        else if (key == "adam_eps") c.ppo.adam_eps = cfg_double(raw, where);
        else if (key == "seed") c.ppo.seed = cfg_u64(raw, where);
        else if (key == "eps_reach") c.ppo.eps_reach = cfg_double(raw, where);
        else if (key == "goal_timeout") c.ppo.goal_timeout = static_cast<int>(cfg_int(raw, where));
        else if (key == "hidden") c.ppo.hidden = parse_int_list(raw, where);
        else if (key == "checkpoint_every") c.ppo.checkpoint_every = static_cast<int>(cfg_int(raw, where));
        else known = false;
      } else if (section == "map_elites") {
        if (key == "batch_size") c.map_elites.batch_size = static_cast<int>(cfg_int(raw, where));
        else if (key == "iterations") c.map_elites.iterations = cfg_int(raw, where);
        else if (key == "sigma") c.map_elites.sigma = cfg_double(raw, where);
        else if (key == "init_pop") c.map_elites.init_pop = static_cast<int>(cfg_int(raw, where));
        else if (key == "episode_len") c.map_elites.episode_len = static_cast<int>(cfg_int(raw, where));
        else if (key == "seed") c.map_elites.seed = cfg_u64(raw, where);
        else if (key == "hidden") c.map_elites.hidden = parse_int_list(raw, where);
        else known = false;
      } else if (section == "eval") {
        if (key == "n_reevals") c.eval_n_reevals = static_cast<int>(cfg_int(raw, where));
        else if (key == "episode_len") c.eval_episode_len = static_cast<int>(cfg_int(raw, where));
        else if (key == "seed_base") c.eval_seed_base = cfg_u64(raw, where);
        else known = false;
      } else {
        throw ConfigError("unknown config section: [" + section + "]");
      }
      if (!known) throw ConfigError("unknown config key: " + where);
    }
  }

  if (c.threads < 1) throw ConfigError("run.threads must be >= 1");
  c.planner.threads = c.threads;
  c.ppo.threads = c.threads;
  c.map_elites.threads = c.threads;
  return c;
}

KeyValues AppConfig::to_keyvalues() const {
  KeyValues kv;
  auto& run = kv["run"];
  run["maze"] = maze;
  run["out_dir"] = out_dir;
  run["seed"] = std::to_string(seed);
  run["threads"] = std::to_string(threads);

  auto& s = kv["sim"];
  s["dt"] = fmt_g17(sim.dt);
  s["mass"] = fmt_g17(sim.mass);
  s["lin_damping"] = fmt_g17(sim.lin_damping);
  s["ang_damping"] = fmt_g17(sim.ang_damping);
  s["force_scale"] = fmt_g17(sim.force_scale);
  s["rotation_penalty"] =
      sim.rotation_penalty == RotationPenalty::kNone ? "none" : "heading_excursion";

  auto& r = kv["reward"];
  r["c_g"] = fmt_g17(reward.c_g);
  r["c_a"] = fmt_g17(reward.c_a);
  r["c_r"] = fmt_g17(reward.c_r);
  r["c_omega"] = fmt_g17(reward.c_omega);
  r["c_alive"] = fmt_g17(reward.c_alive);
  r["r_alive"] = fmt_g17(reward.r_alive);

  auto& a = kv["archive"];
  a["nx"] = std::to_string(archive_nx);
  a["ny"] = std::to_string(archive_ny);
  a["x_lo"] = fmt_g17(archive_bounds.x_lo);
  a["x_hi"] = fmt_g17(archive_bounds.x_hi);
  a["y_lo"] = fmt_g17(archive_bounds.y_lo);
  a["y_hi"] = fmt_g17(archive_bounds.y_hi);

  auto& pl = kv["planner"];
  pl["eps"] = fmt_g17(planner.eps);
  pl["max_steps_per_edge"] = std::to_string(planner.max_steps_per_edge);
  pl["seed"] = std::to_string(planner.seed);
  pl["revalidation_retries"] = std::to_string(planner.revalidation_retries);
  pl["weight_mode"] = planner.weight_mode == EdgeWeightMode::kEuclidean ? "euclidean" : "steps";

  auto& po = kv["policy"];
  po["kind"] = policy_kind == PolicyKind::kAnalytic ? "analytic" : "neural";
  po["file"] = policy_file;
  po["kp"] = fmt_g17(gains.kp);
  po["kd"] = fmt_g17(gains.kd);
  po["action_mode"] =
      action_mode == ActionMode::kDeterministic ? "deterministic" : "stochastic";

  auto& pp = kv["ppo"];
  pp["maze"] = ppo_maze;
  pp["goal_radius"] = fmt_g17(ppo.goal_radius);
  pp["n_envs"] = std::to_string(ppo.n_envs);
  pp["steps_per_rollout"] = std::to_string(ppo.steps_per_rollout);
  pp["total_steps"] = std::to_string(ppo.total_steps);
  pp["lr"] = fmt_g17(ppo.lr);
  pp["clip_eps"] = fmt_g17(ppo.clip_eps);
  pp["gamma"] = fmt_g17(ppo.gamma);
  pp["gae_lambda"] = fmt_g17(ppo.gae_lambda);
  pp["epochs"] = std::to_string(ppo.epochs);
  pp["minibatches"] = std::to_string(ppo.minibatches);
  pp["entropy_coef"] = fmt_g17(ppo.entropy_coef);
  pp["value_coef"] = fmt_g17(ppo.value_coef);
  pp["max_grad_norm"] = fmt_g17(ppo.max_grad_norm);
  pp["adam_eps"] = fmt_g17(ppo.adam_eps);
  pp["seed"] = std::to_string(ppo.seed);
  pp["eps_reach"] = fmt_g17(ppo.eps_reach);
  pp["goal_timeout"] = std::to_string(ppo.goal_timeout);
  pp["hidden"] = join_int_list(ppo.hidden);
  pp["checkpoint_every"] = std::to_string(ppo.checkpoint_every);

  auto& me = kv["map_elites"];
  me["batch_size"] = std::to_string(map_elites.batch_size);
  me["iterations"] = std::to_string(map_elites.iterations);
  me["sigma"] = fmt_g17(map_elites.sigma);
  me["init_pop"] = std::to_string(map_elites.init_pop);
  me["episode_len"] = std::to_string(map_elites.episode_len);
  me["seed"] = std::to_string(map_elites.seed);
  me["hidden"] = join_int_list(map_elites.hidden);

  auto& ev = kv["eval"];
  ev["n_reevals"] = std::to_string(eval_n_reevals);
  ev["episode_len"] = std::to_string(eval_episode_len);
  ev["seed_base"] = std::to_string(eval_seed_base);
  return kv;
}

MazeSpec AppConfig::resolve_maze_name(const std::string& name) const {
  for (const std::string& builtin : builtin_maze_names())
    if (name == builtin) return builtin_maze(name);
  if (std::filesystem::exists(name)) {
    std::ifstream is(name);
    if (!is) throw ConfigError("cannot open maze file: " + name);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_maze_grid(buf.str(), 1.0, std::filesystem::path(name).stem().string());
  }
  if (name.find('/') != std::string::npos || name.find('.') != std::string::npos)
    throw ConfigError("maze file not found: " + name);
  return builtin_maze(name);  // throws the unknown-layout error with the list
}

void AppConfig::resolve_archive_geometry(const MazeSpec& m, int& nx, int& ny,
                                         ArchiveBounds& b) const {
  b = archive_bounds;
  if (b.x_hi <= b.x_lo || b.y_hi <= b.y_lo) b = {0.0, m.width, 0.0, m.height};
  nx = archive_nx;
  ny = archive_ny;
  if (nx <= 0) nx = std::max(1, static_cast<int>(std::lround(b.x_hi - b.x_lo)));
  if (ny <= 0) ny = std::max(1, static_cast<int>(std::lround(b.y_hi - b.y_lo)));
  b.validate();
}

PlannerConfig AppConfig::resolve_planner(const MazeSpec& m) const {
  PlannerConfig pc = planner;
  if (pc.eps <= 0.0) {
    int nx, ny;
    ArchiveBounds b;
    resolve_archive_geometry(m, nx, ny, b);
    pc.eps = 0.5 * (b.x_hi - b.x_lo) / nx;
  }
  pc.validate();
  return pc;
}

int AppConfig::resolved_eval_episode_len(const std::string& maze_name, int configured) {
  if (configured > 0) return configured;
  if (maze_name == "trap2d") return 250;
  if (maze_name == "hardmaze2d") return 3000;
  return 1500;
}

EvalProtocol AppConfig::resolve_eval(const MazeSpec& m) const {
  EvalProtocol p;
  p.n_reevals = eval_n_reevals;
  p.common_reward = reward;
  p.episode_len = resolved_eval_episode_len(m.name, eval_episode_len);
  p.seed_base = eval_seed_base;
  p.validate();
  return p;
}

PolicyHandle AppConfig::resolve_policy() const {
  if (policy_kind == PolicyKind::kAnalytic) {
    PolicyHandle h = PolicyHandle::analytic(gains);
    h.action_mode = action_mode;
    return h;
  }
  if (policy_file.empty())
    throw ConfigError("policy.kind=neural requires policy.file (or --policy)");
  PolicyHandle h = load_policy(policy_file, GoalObservation::kDim);
  h.action_mode = action_mode;
  return h;
}

std::string config_hash(const AppConfig& config) {
  std::string canon;
  for (const auto& [section, keys] : config.to_keyvalues()) {
    canon += "[" + section + "]\n";
    for (const auto& [key, value] : keys) canon += key + "=" + value + "\n";
  }
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string version_string() { return "qdplan 1.0.0"; }

void write_manifest(const std::string& path, const std::string& command, const AppConfig& config,
                    const std::vector<std::string>& outputs, double wall_clock_sec,
                    const ManifestExtra& extra) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["run_id"] = config_hash(config);
  j["version"] = version_string();
  j["seed"] = config.seed;
  j["wall_clock_sec"] = wall_clock_sec;

  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  j["timestamp"] = stamp;

  nlohmann::ordered_json cfg;
  for (const auto& [section, keys] : config.to_keyvalues()) {
    nlohmann::ordered_json sec;
    for (const auto& [key, value] : keys) sec[key] = value;
    cfg[section] = sec;
  }
  j["config"] = cfg;
  j["outputs"] = outputs;

  nlohmann::ordered_json ex = nlohmann::ordered_json::object();
  for (const auto& [k, v] : extra.fields) ex[k] = v;
  j["extras"] = ex;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeError("cannot write manifest: " + path);
  os << j.dump(2) << "\n";
}

}  // namespace qdplan

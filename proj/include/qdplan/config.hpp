#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qdplan/archive.hpp"
#include "qdplan/eval.hpp"
#include "qdplan/map_elites.hpp"
#include "qdplan/maze.hpp"
#include "qdplan/planner.hpp"
#include "qdplan/policy.hpp"
#include "qdplan/ppo.hpp"
#include "qdplan/sim.hpp"

namespace qdplan {

// section -> key -> raw string value
using KeyValues = std::map<std::string, std::map<std::string, std::string>>;

// INI-style: [section] headers, key = value lines, '#' or ';' comments.
KeyValues parse_ini(const std::string& text);
KeyValues load_ini(const std::string& path);

// "section.key=value" command-line override.
void apply_override(KeyValues& kv, const std::string& spec);

// Fully resolved run settings. Unknown sections or keys are config errors so
// typos never silently fall back to defaults.
struct AppConfig {
  // [run]
  std::string maze = "open";       // builtin name or path to a grid file
  std::string out_dir = "runs/out";
  std::uint64_t seed = 1;
  int threads = 1;

  SimParams sim;            // [sim]
  RewardCoeffs reward;      // [reward]

  // [archive] 0 resolution = one cell per meter; hi < lo bounds = maze extent
  int archive_nx = 0, archive_ny = 0;
  ArchiveBounds archive_bounds{0.0, -1.0, 0.0, -1.0};

  // [planner] eps <= 0 resolves to half the cell width
  PlannerConfig planner{/*eps=*/0.0};

  // [policy]
  PolicyKind policy_kind = PolicyKind::kAnalytic;
  std::string policy_file;
  AnalyticGains gains;
  ActionMode action_mode = ActionMode::kDeterministic;

  PpoConfig ppo;            // [ppo]
  std::string ppo_maze = "open";

  MeConfig map_elites;      // [map_elites]

  // [eval] episode_len <= 0 resolves per maze (trap2d 250, hardmaze2d 3000,
  // otherwise 1500)
  int eval_n_reevals = 50;
  int eval_episode_len = 0;
  std::uint64_t eval_seed_base = 9000;

  static AppConfig from_keyvalues(const KeyValues& kv);
  KeyValues to_keyvalues() const;  // resolved snapshot, for manifests

  MazeSpec resolve_maze() const { return resolve_maze_name(maze); }
  MazeSpec resolve_maze_name(const std::string& name) const;
  void resolve_archive_geometry(const MazeSpec& m, int& nx, int& ny, ArchiveBounds& b) const;
  PlannerConfig resolve_planner(const MazeSpec& m) const;
  EvalProtocol resolve_eval(const MazeSpec& m) const;
  PolicyHandle resolve_policy() const;  // loads policy_file for neural kind

  static int resolved_eval_episode_len(const std::string& maze_name, int configured);
};

// FNV-1a over the canonical serialized config + seed; hex string.
std::string config_hash(const AppConfig& config);

std::string version_string();

struct ManifestExtra {
  std::vector<std::pair<std::string, std::string>> fields;
  void add(const std::string& k, const std::string& v) { fields.emplace_back(k, v); }
  void add(const std::string& k, long long v) { fields.emplace_back(k, std::to_string(v)); }
};

// JSON manifest: command, run id (config hash + seed), version, wall clock,
// resolved config snapshot, produced files, and per-command extras.
void write_manifest(const std::string& path, const std::string& command, const AppConfig& config,
                    const std::vector<std::string>& outputs, double wall_clock_sec,
                    const ManifestExtra& extra);

}  // namespace qdplan

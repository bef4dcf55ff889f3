#pragma once

#include <string>
#include <vector>

#include "qdplan/geometry.hpp"

namespace qdplan {

// Static world description. Immutable after construction; validate() is run
// by every factory so instances in circulation always satisfy the invariants.
struct MazeSpec {
  double width = 0.0;   // meters
  double height = 0.0;  // meters
  std::vector<Rect> obstacles;
  Vec2 start;              // meters
  double start_heading = 0.0;  // radians
  std::string name;

  // Throws ConfigError if bounds are non-positive, an obstacle leaves the
  // world, or the start pose is inside an obstacle.
  void validate() const;

  bool in_bounds(Vec2 p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }

  // In bounds and not strictly inside any obstacle.
  bool point_free(Vec2 p) const;

  // Shortest distance from p to any obstacle or world edge (0 if touching).
  double clearance(Vec2 p) const;
};

// Registered layouts: "open", "trap2d", "hardmaze2d".
MazeSpec builtin_maze(const std::string& name);
std::vector<std::string> builtin_maze_names();

// Plain-text grid: '#' obstacle, '.' free, 'S' start (exactly one), one
// character per cell, row-major with the first line as the top row.
// cell_size is the side length of a cell in meters.
MazeSpec parse_maze_grid(const std::string& text, double cell_size, const std::string& name);
MazeSpec load_maze_grid(const std::string& path, double cell_size);

// ASCII source of the built-in hard maze (also what docs/mazes.md shows).
const std::string& hardmaze2d_grid_text();

}  // namespace qdplan

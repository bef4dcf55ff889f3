#include "qdplan/maze.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "qdplan/errors.hpp"

namespace qdplan {

void MazeSpec::validate() const {
  if (!(width > 0.0) || !(height > 0.0))
    throw ConfigError("maze '" + name + "': width and height must be positive");
  for (const Rect& r : obstacles) {
    if (!r.valid())
      throw ConfigError("maze '" + name + "': degenerate obstacle rectangle");
    if (r.x0 < 0.0 || r.y0 < 0.0 || r.x1 > width || r.y1 > height)
      throw ConfigError("maze '" + name + "': obstacle outside world bounds");
  }
  if (!in_bounds(start))
    throw ConfigError("maze '" + name + "': start pose outside world bounds");
  for (const Rect& r : obstacles)
    if (r.contains_strict(start))
      throw ConfigError("maze '" + name + "': start pose inside an obstacle");
}

bool MazeSpec::point_free(Vec2 p) const {
  if (!in_bounds(p)) return false;
  for (const Rect& r : obstacles)
    if (r.contains_strict(p)) return false;
  return true;
}

double MazeSpec::clearance(Vec2 p) const {
  double best = std::min(std::min(p.x, width - p.x), std::min(p.y, height - p.y));
  best = std::max(best, 0.0);
  for (const Rect& r : obstacles) {
    if (r.contains_closed(p)) return 0.0;
    double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
    double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
    best = std::min(best, std::sqrt(dx * dx + dy * dy));
  }
  return best;
}

namespace {

MazeSpec make_open() {
  MazeSpec m;
  m.width = 32.0;
  m.height = 32.0;
  m.start = {16.5, 16.5};  // center of cell (16,16) on the default 1 m grid
  m.start_heading = 0.0;
  m.name = "open";
  m.validate();
  return m;
}

// U-shaped trap: 0.5 m walls around a 3 x 4.5 m cavity opening toward +x.
// The agent starts inside the cavity, 1.75 m from the mouth, so any goal
// behind the back wall forces an escape through the opening first.
MazeSpec make_trap2d() {
  MazeSpec m;
  m.width = 32.0;
  m.height = 32.0;
  m.obstacles = {
      {10.75, 13.75, 11.25, 19.25},  // back wall
      {11.25, 18.75, 14.25, 19.25},  // top arm
      {11.25, 13.75, 14.25, 14.25},  // bottom arm
  };
  m.start = {12.5, 16.5};
  m.start_heading = 0.0;
  m.name = "trap2d";
  m.validate();
  return m;
}

// 40 x 40 recreation of the deceptive hard maze: alternating snake walls plus
// a dead-end pocket directly above the start.
const char* const kHardMazeRows[40] = {
    "########################################",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "###############################........#",
    "###############################........#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#........###############################",
    "#........###############################",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "###############################........#",
    "###############################........#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "#........###############################",
    "#........###############################",
    "#......................................#",
    "#..............###########.............#",
    "#..............###########.............#",
    "#..............##.......##.............#",
    "#..............##.......##.............#",
    "#......................................#",
    "#...................S..................#",
    "#......................................#",
    "#......................................#",
    "#......................................#",
    "########################################",
};

}  // namespace

const std::string& hardmaze2d_grid_text() {
  static const std::string text = [] {
    std::string t;
    for (const char* row : kHardMazeRows) {
      t += row;
      t += '\n';
    }
    return t;
  }();
  return text;
}

MazeSpec parse_maze_grid(const std::string& text, double cell_size, const std::string& name) {
  if (!(cell_size > 0.0)) throw ConfigError("maze grid: cell_size must be positive");

  std::vector<std::string> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw ConfigError("maze grid '" + name + "': no rows");
  const size_t ncols = rows[0].size();
  for (const std::string& r : rows)
    if (r.size() != ncols)
      throw ConfigError("maze grid '" + name + "': ragged rows (all rows must have equal length)");

  const size_t nrows = rows.size();
  MazeSpec m;
  m.name = name;
  m.width = static_cast<double>(ncols) * cell_size;
  m.height = static_cast<double>(nrows) * cell_size;

  int start_count = 0;
  // Row 0 is the top of the world (largest y).
  for (size_t r = 0; r < nrows; ++r) {
    const double y1 = m.height - static_cast<double>(r) * cell_size;
    const double y0 = y1 - cell_size;
    size_t c = 0;
    while (c < ncols) {
      const char ch = rows[r][c];
      if (ch == '#') {
        size_t c0 = c;
        while (c < ncols && rows[r][c] == '#') ++c;
        m.obstacles.push_back({static_cast<double>(c0) * cell_size, y0,
                               static_cast<double>(c) * cell_size, y1});
      } else if (ch == '.' || ch == 'S') {
        if (ch == 'S') {
          ++start_count;
          m.start = {(static_cast<double>(c) + 0.5) * cell_size, 0.5 * (y0 + y1)};
        }
        ++c;
      } else {
        throw ConfigError(std::string("maze grid '") + name + "': invalid character '" + ch +
                          "' (expected '#', '.' or 'S')");
      }
    }
  }
  if (start_count != 1)
    throw ConfigError("maze grid '" + name + "': expected exactly one 'S', found " +
                      std::to_string(start_count));

  // Merge vertically adjacent rectangles with identical x-extent.
  std::sort(m.obstacles.begin(), m.obstacles.end(), [](const Rect& a, const Rect& b) {
    if (a.x0 != b.x0) return a.x0 < b.x0;
    if (a.x1 != b.x1) return a.x1 < b.x1;
    return a.y0 < b.y0;
  });
  std::vector<Rect> merged;
  for (const Rect& r : m.obstacles) {
    if (!merged.empty() && merged.back().x0 == r.x0 && merged.back().x1 == r.x1 &&
        merged.back().y1 == r.y0) {
      merged.back().y1 = r.y1;
    } else {
      merged.push_back(r);
    }
  }
  m.obstacles = std::move(merged);

  m.start_heading = 0.0;
  m.validate();
  return m;
}

MazeSpec load_maze_grid(const std::string& path, double cell_size) {
  std::ifstream f(path);
  if (!f) throw ConfigError("maze grid: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_maze_grid(ss.str(), cell_size, path);
}

std::vector<std::string> builtin_maze_names() { return {"hardmaze2d", "open", "trap2d"}; }

MazeSpec builtin_maze(const std::string& name) {
  if (name == "open") return make_open();
  if (name == "trap2d") return make_trap2d();
  if (name == "hardmaze2d") return parse_maze_grid(hardmaze2d_grid_text(), 1.0, "hardmaze2d");
  std::string known;
  for (const std::string& n : builtin_maze_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown maze '" + name + "' (available: " + known + ")");
}

}  // namespace qdplan

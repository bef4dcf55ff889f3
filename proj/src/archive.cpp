#include "qdplan/archive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qdplan/csvio.hpp"
#include "qdplan/errors.hpp"

namespace qdplan {

void ArchiveBounds::validate() const {
  if (!(x_lo < x_hi) || !(y_lo < y_hi))
    throw ConfigError("archive bounds must satisfy lo < hi on both axes");
}

GridArchive::GridArchive(int nx, int ny, ArchiveBounds bounds)
    : nx_(nx), ny_(ny), bounds_(bounds) {
  if (nx <= 0 || ny <= 0) throw ConfigError("archive resolution must be positive");
  bounds.validate();
  cells_.resize(static_cast<std::size_t>(nx) * ny);
}

CellIndex GridArchive::cell_of(Vec2 d) const {
  CellIndex c;
  c.in_bounds = d.x >= bounds_.x_lo && d.x <= bounds_.x_hi && d.y >= bounds_.y_lo &&
                d.y <= bounds_.y_hi;
  const auto bin = [](double v, double lo, double cell, int n) {
    int b = static_cast<int>(std::floor((v - lo) / cell));
    return std::clamp(b, 0, n - 1);
  };
  c.i = bin(d.x, bounds_.x_lo, cell_width(), nx_);
  c.j = bin(d.y, bounds_.y_lo, cell_height(), ny_);
  return c;
}

Vec2 GridArchive::cell_center(int i, int j) const {
  if (i < 0 || i >= nx_ || j < 0 || j >= ny_)
    throw RuntimeError("cell_center: index out of range");
  return {bounds_.x_lo + (i + 0.5) * cell_width(), bounds_.y_lo + (j + 0.5) * cell_height()};
}

bool GridArchive::insert(const std::string& occupant_id, double objective, Vec2 descriptor) {
  const CellIndex c = cell_of(descriptor);
  std::optional<ArchiveEntry>& slot = cells_[idx(c.i, c.j)];
  if (slot.has_value() && !(objective > slot->objective)) return false;
  if (!slot.has_value()) ++occupied_;
  slot = ArchiveEntry{occupant_id, objective, descriptor};
  return true;
}

const std::optional<ArchiveEntry>& GridArchive::at(int i, int j) const {
  if (i < 0 || i >= nx_ || j < 0 || j >= ny_) throw RuntimeError("archive at: index out of range");
  return cells_[idx(i, j)];
}

QdMetrics GridArchive::compute_metrics() const {
  QdMetrics m;
  double dem_sum = 0.0;
  double min_obj = 0.0;
  bool any = false;
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      const auto& slot = cells_[idx(i, j)];
      if (!slot.has_value()) continue;
      m.qd_score += slot->objective;
      if (!any || slot->objective > *m.best) m.best = slot->objective;
      if (!any || slot->objective < min_obj) min_obj = slot->objective;
      dem_sum += distance(slot->achieved, cell_center(i, j));
      any = true;
    }
  }
  m.coverage = static_cast<double>(occupied_) / total_cells();
  if (any) {
    m.dem = dem_sum / occupied_;
    m.offset_baseline = min_obj;
    m.qd_score_offset = m.qd_score - min_obj * occupied_;
  }
  return m;
}

void save_archive_csv(const GridArchive& a, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot open for writing: " + path);
  os << "# grid_archive v1\n";
  os << "# nx=" << a.nx() << " ny=" << a.ny() << " x_lo=" << fmt_g17(a.bounds().x_lo)
     << " x_hi=" << fmt_g17(a.bounds().x_hi) << " y_lo=" << fmt_g17(a.bounds().y_lo)
     << " y_hi=" << fmt_g17(a.bounds().y_hi) << "\n";
  os << "i,j,objective,achieved_x,achieved_y,occupant_id\n";
  for (int j = 0; j < a.ny(); ++j) {
    for (int i = 0; i < a.nx(); ++i) {
      const auto& slot = a.at(i, j);
      if (!slot.has_value()) continue;
      os << i << ',' << j << ',' << fmt_g17(slot->objective) << ',' << fmt_g17(slot->achieved.x)
         << ',' << fmt_g17(slot->achieved.y) << ',' << slot->occupant_id << "\n";
    }
  }
  if (!os) throw RuntimeError("write failed: " + path);
}

namespace {

// Pulls "key=value" out of the geometry comment line.
std::string header_field(const std::string& line, const std::string& key,
                         const std::string& path) {
  const std::string needle = key + "=";
  const auto pos = line.find(needle);
  if (pos == std::string::npos)
    throw CorruptFileError("archive csv missing " + key + ": " + path);
  const auto start = pos + needle.size();
  auto end = line.find(' ', start);
  if (end == std::string::npos) end = line.size();
  return line.substr(start, end - start);
}

}  // namespace

GridArchive load_archive_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CorruptFileError("cannot open archive csv: " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("# grid_archive", 0) != 0)
    throw CorruptFileError("not an archive csv: " + path);
  if (!std::getline(is, line) || line.rfind("# nx=", 0) != 0)
    throw CorruptFileError("archive csv missing geometry header: " + path);

  const int nx = parse_int(header_field(line, "nx", path));
  const int ny = parse_int(header_field(line, "ny", path));
  ArchiveBounds b;
  b.x_lo = parse_double(header_field(line, "x_lo", path));
  b.x_hi = parse_double(header_field(line, "x_hi", path));
  b.y_lo = parse_double(header_field(line, "y_lo", path));
  b.y_hi = parse_double(header_field(line, "y_hi", path));
  GridArchive a(nx, ny, b);

  if (!std::getline(is, line) || line.rfind("i,j,objective", 0) != 0)
    throw CorruptFileError("archive csv missing column header: " + path);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw CorruptFileError("archive csv malformed row: " + path);
    const int i = parse_int(f[0]);
    const int j = parse_int(f[1]);
    const double obj = parse_double(f[2]);
    const Vec2 achieved{parse_double(f[3]), parse_double(f[4])};
    const CellIndex c = a.cell_of(achieved);
    if (c.i != i || c.j != j)
      throw CorruptFileError("archive csv row does not bin to its cell: " + path);
    if (a.at(i, j).has_value()) throw CorruptFileError("archive csv duplicate cell: " + path);
    a.insert(f[5], obj, achieved);
  }
  return a;
}

}  // namespace qdplan

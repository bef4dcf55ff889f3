#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdplan/geometry.hpp"

namespace qdplan {

struct ArchiveBounds {
  double x_lo = 0.0, x_hi = 1.0;
  double y_lo = 0.0, y_hi = 1.0;
  void validate() const;
};

struct ArchiveEntry {
  std::string occupant_id;
  double objective = 0.0;
  Vec2 achieved;  // descriptor actually reached by the occupant
};

struct CellIndex {
  int i = 0;  // x bin
  int j = 0;  // y bin
  bool in_bounds = true;

  friend bool operator==(const CellIndex& a, const CellIndex& b) {
    return a.i == b.i && a.j == b.j;
  }
};

struct QdMetrics {
  double qd_score = 0.0;
  double coverage = 0.0;
  std::optional<double> best;
  std::optional<double> dem;
  // Offset-normalized score: sum(objective - baseline) with baseline = the
  // minimum occupied objective, recorded alongside. Non-negative by
  // construction, unlike the raw sum when rewards are negative.
  double qd_score_offset = 0.0;
  std::optional<double> offset_baseline;
};

// Uniform 2D grid of elites keyed by descriptor. Insertion keeps the
// strictly-better occupant; descriptors always bin back to the cell they
// occupy.
class GridArchive {
 public:
  GridArchive(int nx, int ny, ArchiveBounds bounds);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const ArchiveBounds& bounds() const { return bounds_; }
  double cell_width() const { return (bounds_.x_hi - bounds_.x_lo) / nx_; }
  double cell_height() const { return (bounds_.y_hi - bounds_.y_lo) / ny_; }
  int total_cells() const { return nx_ * ny_; }

  // Clamp-binning: descriptors outside the bounds map to the nearest edge
  // cell with in_bounds=false; the exact upper bound belongs to the last bin.
  CellIndex cell_of(Vec2 descriptor) const;
  Vec2 cell_center(int i, int j) const;
  Vec2 cell_center(CellIndex c) const { return cell_center(c.i, c.j); }

  bool insert(const std::string& occupant_id, double objective, Vec2 descriptor);
  const std::optional<ArchiveEntry>& at(int i, int j) const;
  int occupied_count() const { return occupied_; }

  QdMetrics compute_metrics() const;

 private:
  int idx(int i, int j) const { return j * nx_ + i; }
  int nx_, ny_;
  ArchiveBounds bounds_;
  std::vector<std::optional<ArchiveEntry>> cells_;
  int occupied_ = 0;
};

// CSV layout: geometry comment header, column header, then one row per
// occupied cell: i,j,objective,achieved_x,achieved_y,occupant_id.
void save_archive_csv(const GridArchive& archive, const std::string& path);
GridArchive load_archive_csv(const std::string& path);

}  // namespace qdplan

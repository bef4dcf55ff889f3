#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qdplan {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

// Binary PPM (P6); pixels row-major, top row first.
void write_ppm(const std::string& path, int width, int height, const std::vector<Rgb>& pixels);

// Renders an nx x ny grid of optional values (grid j=0 is the bottom row) as
// a blown-up heatmap. Missing cells are dark gray; present values map onto a
// blue->yellow ramp over [lo, hi] (degenerate range renders mid-ramp).
void write_grid_heatmap(const std::string& path, int nx, int ny,
                        const std::vector<std::optional<double>>& values, double lo, double hi,
                        int pixels_per_cell = 12);

Rgb ramp_color(double t);  // t in [0,1], clamped

}  // namespace qdplan

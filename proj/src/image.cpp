#include "qdplan/image.hpp"

#include <algorithm>
#include <fstream>

#include "qdplan/errors.hpp"

namespace qdplan {

void write_ppm(const std::string& path, int width, int height, const std::vector<Rgb>& pixels) {
  if (width <= 0 || height <= 0 ||
      pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw RuntimeError("write_ppm: pixel buffer does not match dimensions");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeError("cannot open for writing: " + path);
  os << "P6\n" << width << " " << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()),
           static_cast<std::streamsize>(pixels.size() * sizeof(Rgb)));
  if (!os) throw RuntimeError("write failed: " + path);
}

Rgb ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  // Two-segment ramp: deep blue -> teal -> yellow.
  const auto lerp = [](double a, double b, double u) { return a + (b - a) * u; };
  double r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = lerp(13, 33, u);
    g = lerp(8, 145, u);
    b = lerp(135, 140, u);
  } else {
    const double u = (t - 0.5) / 0.5;
    r = lerp(33, 253, u);
    g = lerp(145, 231, u);
    b = lerp(140, 37, u);
  }
  return {static_cast<std::uint8_t>(r + 0.5), static_cast<std::uint8_t>(g + 0.5),
          static_cast<std::uint8_t>(b + 0.5)};
}

void write_grid_heatmap(const std::string& path, int nx, int ny,
                        const std::vector<std::optional<double>>& values, double lo, double hi,
                        int pixels_per_cell) {
  if (nx <= 0 || ny <= 0 || values.size() != static_cast<std::size_t>(nx) * ny)
    throw RuntimeError("write_grid_heatmap: value buffer does not match grid");
  const int s = std::max(1, pixels_per_cell);
  const int w = nx * s;
  const int h = ny * s;
  const Rgb empty{40, 40, 46};
  std::vector<Rgb> px(static_cast<std::size_t>(w) * h, empty);
  const double span = hi - lo;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const auto& v = values[static_cast<std::size_t>(j) * nx + i];
      if (!v.has_value()) continue;
      const double t = span > 0.0 ? (*v - lo) / span : 0.5;
      const Rgb c = ramp_color(t);
      // Grid row j=0 renders at the image bottom.
      const int y0 = (ny - 1 - j) * s;
      for (int dy = 0; dy < s; ++dy)
        for (int dx = 0; dx < s; ++dx) px[static_cast<std::size_t>(y0 + dy) * w + i * s + dx] = c;
    }
  }
  write_ppm(path, w, h, px);
}

}  // namespace qdplan

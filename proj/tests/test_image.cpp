#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "qdplan/errors.hpp"
#include "qdplan/image.hpp"

using namespace qdplan;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}
}  // namespace

TEST_SUITE_BEGIN("image");

TEST_CASE("write_ppm emits a valid P6 header and payload") {
  const std::string path = "test_img.ppm";
  std::vector<Rgb> px = {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {10, 20, 30}};
  write_ppm(path, 2, 2, px);
  std::string data = slurp(path);
  CHECK(data.rfind("P6\n2 2\n255\n", 0) == 0);
  CHECK(data.size() == 11 + 12);  // 11-byte header + 4 pixels * 3 bytes
  CHECK(static_cast<unsigned char>(data[11]) == 255);
  CHECK(static_cast<unsigned char>(data[12]) == 0);
  CHECK(static_cast<unsigned char>(data[data.size() - 1]) == 30);
  std::remove(path.c_str());
}

TEST_CASE("write_ppm validates sizes") {
  std::vector<Rgb> px(3);
  CHECK_THROWS_AS(write_ppm("bad.ppm", 2, 2, px), RuntimeError);
  CHECK_THROWS_AS(write_ppm("bad.ppm", 0, 2, px), RuntimeError);
}

TEST_CASE("ramp endpoints and ordering") {
  Rgb lo = ramp_color(0.0), mid = ramp_color(0.5), hi = ramp_color(1.0);
  CHECK(lo.b > lo.r);   // cold end is blue
  CHECK(hi.r > hi.b);   // hot end is yellow
  CHECK(hi.g > lo.g);
  CHECK(ramp_color(-5.0).b == lo.b);  // clamped
  CHECK(ramp_color(7.0).r == hi.r);
  (void)mid;
}

TEST_CASE("heatmap renders bottom row at the bottom and missing cells gray") {
  const std::string path = "test_hm.ppm";
  // 2 x 2 grid: only cell (0,0) [bottom-left] present with the max value
  std::vector<std::optional<double>> grid(4);
  grid[0] = 1.0;
  write_grid_heatmap(path, 2, 2, grid, 0.0, 1.0, 1);
  std::string data = slurp(path);
  REQUIRE(data.size() == 11 + 12);  // "P6\n2 2\n255\n" + 4 px
  auto px = [&](int k) {
    return Rgb{static_cast<std::uint8_t>(data[11 + 3 * k]),
               static_cast<std::uint8_t>(data[11 + 3 * k + 1]),
               static_cast<std::uint8_t>(data[11 + 3 * k + 2])};
  };
  Rgb hot = ramp_color(1.0);
  // image row 0 is the TOP -> grid row j=1 (missing, gray); bottom-left is pixel 2
  Rgb top_left = px(0), bottom_left = px(2);
  CHECK(bottom_left.r == hot.r);
  CHECK(bottom_left.g == hot.g);
  CHECK(bottom_left.b == hot.b);
  CHECK(top_left.r == 40);
  CHECK(top_left.g == 40);
  CHECK(top_left.b == 46);
  std::remove(path.c_str());
}

TEST_CASE("degenerate range renders mid-ramp") {
  const std::string path = "test_hm2.ppm";
  std::vector<std::optional<double>> grid = {5.0};
  write_grid_heatmap(path, 1, 1, grid, 5.0, 5.0, 1);
  std::string data = slurp(path);
  Rgb mid = ramp_color(0.5);
  CHECK(static_cast<std::uint8_t>(data[data.size() - 3]) == mid.r);
  CHECK(static_cast<std::uint8_t>(data[data.size() - 2]) == mid.g);
  CHECK(static_cast<std::uint8_t>(data[data.size() - 1]) == mid.b);
  std::remove(path.c_str());
}

TEST_SUITE_END();

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "polarfilm/field.hpp"

namespace polarfilm {

/// 8-bit RGB raster written as binary PPM (P6).
struct Image {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;

  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 255) {}
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

void write_ppm(const std::filesystem::path& path, const Image& image);

/// Maps [lo, hi] through a blue-white-red ramp, `scale` pixels per cell.
Image heatmap(const Field& f, double lo, double hi, int scale = 4);

/// One box (quartiles, whiskers at min/max, median line) per group.
Image boxplot(const std::vector<std::pair<std::string, std::vector<double>>>& groups, int width = 480,
              int height = 320);

}  // namespace polarfilm

#include "polarfilm/render.hpp"

#include <algorithm>
#include <cmath>

#include "polarfilm/blob_io.hpp"
#include "polarfilm/error.hpp"

namespace polarfilm {

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[i] = r;
  rgb[i + 1] = g;
  rgb[i + 2] = b;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.rgb.begin(), image.rgb.end());
  write_file(path, bytes);
}

Image heatmap(const Field& f, double lo, double hi, int scale) {
  if (f.empty()) throw ShapeError("heatmap of an empty field");
  if (!(hi > lo) || scale < 1) throw ParameterError("heatmap needs hi > lo and scale >= 1");
  Image img(f.width() * scale, f.height() * scale);
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      const double t = std::clamp((f(y, x) - lo) / (hi - lo), 0.0, 1.0);
      // blue -> white -> red
      const double r = t < 0.5 ? 2 * t : 1.0;
      const double b = t < 0.5 ? 1.0 : 2 * (1 - t);
      const double g = 1.0 - std::abs(2 * t - 1);
      for (int dy = 0; dy < scale; ++dy) {
        for (int dx = 0; dx < scale; ++dx) {
          img.set(x * scale + dx, y * scale + dy, static_cast<std::uint8_t>(std::lround(255 * r)),
                  static_cast<std::uint8_t>(std::lround(255 * g)), static_cast<std::uint8_t>(std::lround(255 * b)));
        }
      }
    }
  }
  return img;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
}

void hline(Image& img, int x0, int x1, int y, std::uint8_t shade) {
  for (int x = x0; x <= x1; ++x) img.set(x, y, shade, shade, shade);
}

void vline(Image& img, int x, int y0, int y1, std::uint8_t shade) {
  if (y0 > y1) std::swap(y0, y1);
  for (int y = y0; y <= y1; ++y) img.set(x, y, shade, shade, shade);
}

}  // namespace

Image boxplot(const std::vector<std::pair<std::string, std::vector<double>>>& groups, int width, int height) {
  if (groups.empty()) throw ParameterError("boxplot needs at least one group");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [name, v] : groups) {
    if (v.empty()) throw ParameterError("boxplot group '" + name + "' is empty");
    for (double x : v) {
      if (std::isfinite(x)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
  }
  if (!(hi > lo)) {
    lo -= 1;
    hi += 1;
  }
  Image img(width, height);
  const int margin = 16;
  auto ypix = [&](double v) {
    return static_cast<int>(std::lround(height - margin - (v - lo) / (hi - lo) * (height - 2 * margin)));
  };
  const int slot = (width - 2 * margin) / static_cast<int>(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& v = groups[g].second;
    const int cx = margin + slot * static_cast<int>(g) + slot / 2;
    const int half = std::max(2, slot / 4);
    const int q1 = ypix(quantile(v, 0.25)), q3 = ypix(quantile(v, 0.75)), med = ypix(quantile(v, 0.5));
    const int mn = ypix(*std::min_element(v.begin(), v.end())), mx = ypix(*std::max_element(v.begin(), v.end()));
    vline(img, cx, mn, q1, 0);
    vline(img, cx, q3, mx, 0);
    hline(img, cx - half / 2, cx + half / 2, mn, 0);
    hline(img, cx - half / 2, cx + half / 2, mx, 0);
    for (int y = std::min(q1, q3); y <= std::max(q1, q3); ++y) {
      for (int x = cx - half; x <= cx + half; ++x) img.set(x, y, 140, 170, 220);
    }
    vline(img, cx - half, q1, q3, 0);
    vline(img, cx + half, q1, q3, 0);
    hline(img, cx - half, cx + half, q1, 0);
    hline(img, cx - half, cx + half, q3, 0);
    hline(img, cx - half, cx + half, med, 200);
  }
  vline(img, margin / 2, margin, height - margin, 0);
  return img;
}

}  // namespace polarfilm

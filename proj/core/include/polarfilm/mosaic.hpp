#pragma once

#include <array>
#include <cstdint>

#include "polarfilm/field.hpp"
#include "polarfilm/polar.hpp"

namespace polarfilm {

/// Assignment of analyzer channels (0..3 = 0, 45, 90, 135 degrees) to the
/// positions of a 2x2 super-pixel, indexed [row][col].
struct MosaicLayout {
  std::array<std::array<int, 2>, 2> channel = {{{2, 1}, {3, 0}}};

  /// Sony IMX250MZR-style pattern: 90 | 45 over 135 | 0.
  static MosaicLayout standard() { return {}; }

  int at(int y, int x) const { return channel[y & 1][x & 1]; }
  /// Row/column offset of `ch` inside the super-pixel.
  std::array<int, 2> offset_of(int ch) const;
  /// Throws ParameterError unless each channel appears exactly once.
  void validate() const;

  bool operator==(const MosaicLayout&) const = default;
};

/// Raw division-of-focal-plane frame, normalized to [0, 1].
struct RawMosaic {
  Field data;
  MosaicLayout layout;

  int height() const { return data.height(); }
  int width() const { return data.width(); }
};

enum class DemosaicMethod { Subsample, Bilinear, EdgeAware };

/// Splits the raw frame into four quarter-resolution channels.
PolarStack decompose_raw(const RawMosaic& raw);

/// Full-resolution reconstruction. Every method reproduces the raw value at
/// the pixels where the layout samples that channel.
PolarStack demosaic(const RawMosaic& raw, DemosaicMethod method);

/// Samples a full-resolution stack through the layout.
RawMosaic mosaic(const PolarStack& stack, const MosaicLayout& layout = MosaicLayout::standard());

/// 16-bit sensor code <-> normalized intensity (round half to even on write).
std::uint16_t to_sensor_code(double v);
inline double from_sensor_code(std::uint16_t code) { return static_cast<double>(code) / 65535.0; }

}  // namespace polarfilm

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include "polarfilm/field.hpp"

namespace polarfilm {

/// Gamma applied to ground-truth intensities.
inline constexpr double kDefaultGamma = 2.2;
/// Below this total intensity the degree of polarization is reported as 0.
inline constexpr double kDopIntensityFloor = 1e-8;

/// Analyzer angles of the four channels, in channel order.
inline constexpr std::array<double, 4> kCanonicalAngles = {
    0.0, std::numbers::pi / 4.0, std::numbers::pi / 2.0, 3.0 * std::numbers::pi / 4.0};

/// Four co-registered captures behind analyzers at 0, 45, 90 and 135 degrees.
/// Intensities are normalized to [0, 1].
struct PolarStack {
  Field i0, i45, i90, i135;

  PolarStack() = default;
  PolarStack(int height, int width, double fill = 0.0)
      : i0(height, width, fill), i45(height, width, fill), i90(height, width, fill),
        i135(height, width, fill) {}

  int height() const { return i0.height(); }
  int width() const { return i0.width(); }

  /// Channel by index 0..3 in the order 0, 45, 90, 135 degrees.
  Field& channel(int k);
  const Field& channel(int k) const;

  /// Throws ShapeError / DataError when the type invariants do not hold.
  void validate() const;

  bool operator==(const PolarStack&) const = default;
};

/// Linear Stokes parameters per pixel.
struct StokesMap {
  Field s0, s1, s2;

  int height() const { return s0.height(); }
  int width() const { return s0.width(); }
  void validate() const;
};

/// Per-pixel angle in radians, in [0, pi).
struct AngleMap {
  Field a;

  AngleMap() = default;
  explicit AngleMap(Field angles) : a(std::move(angles)) {}
  AngleMap(int height, int width, double fill) : a(height, width, fill) {}

  int height() const { return a.height(); }
  int width() const { return a.width(); }
};

enum class ExtremaMode {
  /// imax = s0 + L/2, imin = s0 - L/2. Overestimates both extrema; kept for comparison.
  Literal,
  /// imax = (s0 + L)/2, imin = (s0 - L)/2: the true extrema over analyzer angle.
  PhysConsistent,
};

struct ExtremaPair {
  Field imax, imin;
  ExtremaMode mode = ExtremaMode::PhysConsistent;
};

StokesMap stokes_from_stack(const PolarStack& stack);

/// Intensity seen through an ideal analyzer at angle alpha.
inline double capture_at_angle(double s0, double s1, double s2, double alpha) {
  return 0.5 * (s0 + s1 * std::cos(2.0 * alpha) + s2 * std::sin(2.0 * alpha));
}
Field capture_at_angle(const StokesMap& st, const AngleMap& alpha);

/// Captures at the four canonical angles, using exact trigonometric values.
PolarStack captures_from_stokes(const StokesMap& st);

/// Angle of polarization, 0.5 * atan2(s2, s1) folded into [0, pi). Pixels
/// with s1 = s2 = 0 map to 0; when `degenerate` is non-null it receives 1
/// at those pixels and 0 elsewhere.
AngleMap aop(const StokesMap& st, Field* degenerate = nullptr);
double aop(double s1, double s2);

/// Degree of linear polarization in [0, 1]. `valid` (optional) marks pixels
/// whose s0 exceeds kDopIntensityFloor.
Field dop(const StokesMap& st, Field* valid = nullptr);
double dop(double s0, double s1, double s2);

ExtremaPair extrema(const StokesMap& st, ExtremaMode mode = ExtremaMode::PhysConsistent);

/// imax cos^2(theta) + imin sin^2(theta), pixelwise.
Field malus_eval(const ExtremaPair& ex, const AngleMap& theta);
inline double malus_eval(double imax, double imin, double theta) {
  // Half-angle form: exact at theta = 0, pi/4 and pi/2.
  const double c = std::cos(2.0 * theta);
  return imax * (0.5 * (1.0 + c)) + imin * (0.5 * (1.0 - c));
}

/// Clamps to [0, 1] and raises to 1/gamma. Throws ParameterError if gamma <= 0.
Field gamma_correct(const Field& in, double gamma);

/// Mean of the four captures.
Field mean_intensity(const PolarStack& stack);

/// Gamma-corrected mean of the four captures.
Field intensity_gt(const PolarStack& stack, double gamma = kDefaultGamma);

/// max |(i0 + i90) - (i45 + i135)| over the image.
double consistency_residual(const PolarStack& stack);

}  // namespace polarfilm

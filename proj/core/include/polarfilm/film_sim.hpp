#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "polarfilm/field.hpp"
#include "polarfilm/polar.hpp"

namespace polarfilm {

enum class ContentKind { QrLike, TextLike, ProductTexture };

std::string to_string(ContentKind kind);
/// Accepts "qr", "text", "product". Throws ParameterError otherwise.
ContentKind content_kind_from_string(const std::string& name);

/// Generator parameters for one synthetic film-covered scene.
struct SceneConfig {
  int width = 64;
  int height = 64;
  ContentKind content = ContentKind::QrLike;
  /// Wrinkle ridges per scene scale with this; 0 disables wrinkles, their
  /// highlights and the film texture. Range [0, 2].
  double wrinkle_density = 0.6;
  /// Peak highlight total intensity. Range [0, 1].
  double highlight_strength = 0.45;
  /// Film transmittance range, 0 < min <= max <= 1.
  double transmittance_min = 0.7;
  double transmittance_max = 0.95;
  /// Amplitude of additive film texture. Range [0, 0.2].
  double texture_amplitude = 0.03;
  /// Degree of linear polarization of highlights, 0 <= min <= max <= 1.
  double highlight_dolp_min = 0.6;
  double highlight_dolp_max = 0.95;
  /// Per-capture Gaussian noise. Range [0, 0.1].
  double noise_sigma = 0.002;
  std::uint64_t seed = 0;

  /// Throws ParameterError naming the offending field.
  void validate() const;
};

/// Ground-truth decomposition of a simulated capture.
struct FilmScene {
  /// Clean diffuse image, [0, 1].
  Field im;
  /// Signed film degradation; im + id_field stays inside [0, 1].
  Field id_field;
  /// Texture part of id_field (zero without wrinkles).
  Field texture;
  /// Highlight total intensity, >= 0.
  Field hl_s0;
  /// Highlight degree of linear polarization, [0, 1].
  Field hl_dolp;
  /// Highlight polarization axis, [0, pi).
  Field hl_phi;
  std::uint64_t seed = 0;
  SceneConfig config;
  int ridge_count = 0;

  int height() const { return im.height(); }
  int width() const { return im.width(); }
};

FilmScene generate_scene(const SceneConfig& cfg);

/// Unpolarized radiance U = clamp(im + id_field, 0, 1).
Field unpolarized_part(const FilmScene& scene);

/// Stokes parameters of the composed (noise-free) scene.
StokesMap compose_stokes(const FilmScene& scene);

struct RenderedCapture {
  PolarStack stack;
  /// Ground truth, the clean diffuse image.
  Field gt;
};

/// Renders the four analyzer captures with i.i.d. Gaussian noise and clamps
/// them to [0, 1]. Noise draws are seeded from the scene seed.
RenderedCapture render_captures(const FilmScene& scene, double noise_sigma);

}  // namespace polarfilm

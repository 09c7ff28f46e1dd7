#include "polarfilm/film_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "polarfilm/error.hpp"
#include "polarfilm/rng.hpp"

namespace polarfilm {

namespace {

constexpr double kPi = std::numbers::pi;

// Stream identifiers so each generator stage draws from its own sequence.
enum Stream : std::uint64_t {
  kContentStream = 1,
  kTransmittanceStream,
  kRidgeStream,
  kTextureStream,
  kNoiseStream,
};

Rng stream_rng(std::uint64_t seed, Stream s) { return Rng(splitmix64(seed) ^ splitmix64(s)); }

// Sum of random plane waves with wavelengths in [min_wl, max_wl] pixels,
// rescaled to [0, 1].
Field plane_wave_field(Rng& rng, int h, int w, int waves, double min_wl, double max_wl) {
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> ws;
  for (int i = 0; i < waves; ++i) {
    const double wl = rng.uniform(min_wl, max_wl);
    const double dir = rng.uniform(0.0, 2.0 * kPi);
    ws.push_back({2.0 * kPi / wl * std::cos(dir), 2.0 * kPi / wl * std::sin(dir),
                  rng.uniform(0.0, 2.0 * kPi), rng.uniform(0.5, 1.0)});
  }
  Field f(h, w);
  double lo = 1e300, hi = -1e300;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (const Wave& wv : ws) v += wv.amp * std::cos(wv.kx * x + wv.ky * y + wv.phase);
      f(y, x) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double span = hi - lo;
  for (double& v : f.values()) v = span > 0.0 ? (v - lo) / span : 0.5;
  return f;
}

void fill_rect(Field& f, int y0, int x0, int hh, int ww, double v) {
  for (int y = std::max(0, y0); y < std::min(f.height(), y0 + hh); ++y) {
    for (int x = std::max(0, x0); x < std::min(f.width(), x0 + ww); ++x) f(y, x) = v;
  }
}

Field qr_content(Rng& rng, int h, int w) {
  constexpr int kModules = 21;
  const double light = rng.uniform(0.72, 0.9);
  const double dark = rng.uniform(0.06, 0.16);
  Field f(h, w, light);
  const int cell = std::max(1, static_cast<int>(0.85 * std::min(h, w)) / kModules);
  const int size = cell * kModules;
  const int oy = (h - size) / 2, ox = (w - size) / 2;
  std::vector<int> modules(kModules * kModules);
  for (int& m : modules) m = static_cast<int>(rng.below(2));
  auto finder = [&](int my, int mx) {
    for (int y = 0; y < 7; ++y) {
      for (int x = 0; x < 7; ++x) {
        const bool ring = y == 0 || y == 6 || x == 0 || x == 6;
        const bool core = y >= 2 && y <= 4 && x >= 2 && x <= 4;
        modules[(my + y) * kModules + mx + x] = (ring || core) ? 1 : 0;
      }
    }
  };
  finder(0, 0);
  finder(0, kModules - 7);
  finder(kModules - 7, 0);
  for (int my = 0; my < kModules; ++my) {
    for (int mx = 0; mx < kModules; ++mx) {
      if (modules[my * kModules + mx]) fill_rect(f, oy + my * cell, ox + mx * cell, cell, cell, dark);
    }
  }
  return f;
}

Field text_content(Rng& rng, int h, int w) {
  const double sheet = rng.uniform(0.7, 0.9);
  const double ink = rng.uniform(0.05, 0.2);
  Field f(h, w, sheet);
  const int scale = std::max(1, std::min(h, w) / 32);
  const int gw = 3 * scale, gh = 5 * scale;
  const int line_pitch = gh + 2 * scale + static_cast<int>(rng.below(2 * scale + 1));
  for (int top = 2 * scale; top + gh < h; top += line_pitch) {
    int x = 2 * scale + static_cast<int>(rng.below(3 * scale + 1));
    while (x + gw < w - scale) {
      if (rng.uniform() < 0.15) {
        x += gw + scale;  // word gap
        continue;
      }
      // 3x5 glyph with a guaranteed vertical stroke
      const int stem = static_cast<int>(rng.below(3));
      for (int gy = 0; gy < 5; ++gy) {
        for (int gx = 0; gx < 3; ++gx) {
          if (gx == stem || rng.uniform() < 0.4) {
            fill_rect(f, top + gy * scale, x + gx * scale, scale, scale, ink);
          }
        }
      }
      x += gw + scale;
    }
  }
  return f;
}

Field product_content(Rng& rng, int h, int w) {
  Field base = plane_wave_field(rng, h, w, 3, 0.8 * std::max(h, w), 2.5 * std::max(h, w));
  const double lo = rng.uniform(0.2, 0.4), hi = rng.uniform(0.55, 0.8);
  Field f(h, w);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = lo + (hi - lo) * base[i];
  const int shapes = 2 + static_cast<int>(rng.below(4));
  for (int s = 0; s < shapes; ++s) {
    const double value = rng.uniform(0.05, 0.95);
    const double cy = rng.uniform(0, h), cx = rng.uniform(0, w);
    const double ry = rng.uniform(0.08, 0.3) * h, rx = rng.uniform(0.08, 0.3) * w;
    const bool ellipse = rng.uniform() < 0.5;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dy = (y - cy) / ry, dx = (x - cx) / rx;
        const bool inside = ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
        if (inside) f(y, x) = value;
      }
    }
  }
  Field grain = plane_wave_field(rng, h, w, 6, 3.0, 7.0);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::clamp(f[i] + 0.06 * (grain[i] - 0.5), 0.0, 1.0);
  return f;
}

struct Ridge {
  double cy, cx, dir, half_length, width, height, wave_amp, wave_len, wave_phase, dolp;
};

// Height of all ridges at a point plus a per-ridge weight used to blend the
// highlight polarization degree.
struct RidgeSample {
  double height = 0.0;
  double dolp_num = 0.0;
  double dolp_den = 0.0;
};

RidgeSample sample_ridges(const std::vector<Ridge>& ridges, double y, double x) {
  RidgeSample s;
  for (const Ridge& r : ridges) {
    const double c = std::cos(r.dir), sn = std::sin(r.dir);
    const double u = (x - r.cx) * c + (y - r.cy) * sn;
    const double v = -(x - r.cx) * sn + (y - r.cy) * c;
    const double centre = r.wave_amp * std::sin(2.0 * kPi * u / r.wave_len + r.wave_phase);
    const double d = v - centre;
    const double across = std::exp(-0.5 * d * d / (r.width * r.width));
    const double along = 1.0 / (1.0 + std::exp((std::abs(u) - r.half_length) / r.width));
    const double hgt = r.height * across * along;
    s.height += hgt;
    s.dolp_num += hgt * r.dolp;
    s.dolp_den += hgt;
  }
  return s;
}

}  // namespace

std::string to_string(ContentKind kind) {
  switch (kind) {
    case ContentKind::QrLike: return "qr";
    case ContentKind::TextLike: return "text";
    case ContentKind::ProductTexture: return "product";
  }
  return "unknown";
}

ContentKind content_kind_from_string(const std::string& name) {
  if (name == "qr") return ContentKind::QrLike;
  if (name == "text") return ContentKind::TextLike;
  if (name == "product") return ContentKind::ProductTexture;
  throw ParameterError("content: unknown kind '" + name + "' (expected qr, text or product)");
}

void SceneConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ParameterError("scene config field '" + field + "': " + why);
  };
  auto in_range = [&](const char* field, double v, double lo, double hi) {
    if (!std::isfinite(v) || v < lo || v > hi) {
      fail(field, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
    }
  };
  if (width < 16 || width % 2 != 0) fail("width", "must be even and >= 16");
  if (height < 16 || height % 2 != 0) fail("height", "must be even and >= 16");
  in_range("wrinkle_density", wrinkle_density, 0.0, 2.0);
  in_range("highlight_strength", highlight_strength, 0.0, 1.0);
  in_range("transmittance_min", transmittance_min, 1e-6, 1.0);
  in_range("transmittance_max", transmittance_max, transmittance_min, 1.0);
  in_range("texture_amplitude", texture_amplitude, 0.0, 0.2);
  in_range("highlight_dolp_min", highlight_dolp_min, 0.0, 1.0);
  in_range("highlight_dolp_max", highlight_dolp_max, highlight_dolp_min, 1.0);
  in_range("noise_sigma", noise_sigma, 0.0, 0.1);
}

FilmScene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  const int h = cfg.height, w = cfg.width;
  FilmScene scene;
  scene.seed = cfg.seed;
  scene.config = cfg;

  Rng content_rng = stream_rng(cfg.seed, kContentStream);
  switch (cfg.content) {
    case ContentKind::QrLike: scene.im = qr_content(content_rng, h, w); break;
    case ContentKind::TextLike: scene.im = text_content(content_rng, h, w); break;
    case ContentKind::ProductTexture: scene.im = product_content(content_rng, h, w); break;
  }

  // Smooth transmittance loss over the whole film.
  Rng trans_rng = stream_rng(cfg.seed, kTransmittanceStream);
  const Field trans_shape = plane_wave_field(trans_rng, h, w, 3, 1.5 * std::max(h, w), 4.0 * std::max(h, w));
  Field transmittance(h, w);
  for (std::size_t i = 0; i < transmittance.size(); ++i) {
    transmittance[i] = cfg.transmittance_min + (cfg.transmittance_max - cfg.transmittance_min) * trans_shape[i];
  }

  // Wrinkle ridges.
  Rng ridge_rng = stream_rng(cfg.seed, kRidgeStream);
  std::vector<Ridge> ridges;
  if (cfg.wrinkle_density > 0.0) {
    const double expected = 5.0 * cfg.wrinkle_density * std::sqrt(static_cast<double>(h) * w) / 64.0;
    const int lo = std::max(1, static_cast<int>(std::floor(0.5 * expected)));
    const int hi = std::max(lo, static_cast<int>(std::ceil(1.5 * expected)));
    const int count = lo + static_cast<int>(ridge_rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    const double extent = std::max(h, w);
    for (int i = 0; i < count; ++i) {
      Ridge r{};
      r.cy = ridge_rng.uniform(0.0, h);
      r.cx = ridge_rng.uniform(0.0, w);
      r.dir = ridge_rng.uniform(0.0, kPi);
      r.half_length = ridge_rng.uniform(0.25, 0.6) * extent;
      r.width = ridge_rng.uniform(1.5, 3.5);
      r.height = ridge_rng.uniform(0.6, 1.0);
      r.wave_amp = ridge_rng.uniform(0.0, 4.0);
      r.wave_len = ridge_rng.uniform(0.4, 1.2) * extent;
      r.wave_phase = ridge_rng.uniform(0.0, 2.0 * kPi);
      r.dolp = ridge_rng.uniform(cfg.highlight_dolp_min, cfg.highlight_dolp_max);
      ridges.push_back(r);
    }
  }
  scene.ridge_count = static_cast<int>(ridges.size());
  const double light_dir = ridge_rng.uniform(0.0, 2.0 * kPi);
  const double lx = std::cos(light_dir), ly = std::sin(light_dir);

  Field height(h, w), dolp_blend(h, w, 0.5 * (cfg.highlight_dolp_min + cfg.highlight_dolp_max));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const RidgeSample s = sample_ridges(ridges, y, x);
      height(y, x) = s.height;
      if (s.dolp_den > 1e-12) dolp_blend(y, x) = s.dolp_num / s.dolp_den;
    }
  }

  // Film texture: band-limited grain plus crease shading, both tied to wrinkles.
  Rng texture_rng = stream_rng(cfg.seed, kTextureStream);
  const Field grain = plane_wave_field(texture_rng, h, w, 8, 4.0, 12.0);
  const double wrinkle_gain = std::min(1.0, cfg.wrinkle_density);
  scene.texture = Field(h, w);
  for (std::size_t i = 0; i < grain.size(); ++i) {
    scene.texture[i] = cfg.texture_amplitude * (wrinkle_gain * 2.0 * (grain[i] - 0.5) - height[i]);
  }

  scene.id_field = Field(h, w);
  scene.hl_s0 = Field(h, w);
  scene.hl_dolp = Field(h, w);
  scene.hl_phi = Field(h, w);
  constexpr double kSlopeRef = 0.12;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double im = scene.im[i];
      double id = im * (transmittance[i] - 1.0) + scene.texture[i];
      id = std::clamp(id, -im, 1.0 - im);
      id = std::clamp(id, -0.5, 0.5);
      scene.id_field[i] = id;

      // Surface slope of the height field; highlights appear where the
      // slope faces the light.
      const double gx = 0.5 * (height(y, std::min(x + 1, w - 1)) - height(y, std::max(x - 1, 0)));
      const double gy = 0.5 * (height(std::min(y + 1, h - 1), x) - height(std::max(y - 1, 0), x));
      const double facing = std::max(0.0, gx * lx + gy * ly) / kSlopeRef;
      double hl = cfg.highlight_strength * (1.0 - std::exp(-facing * facing));
      // No sensor saturation: the brightest capture stays <= 1.
      const double u = im + id;
      hl = std::min(hl, 1.0 - 0.5 * u);
      scene.hl_s0[i] = hl;
      scene.hl_dolp[i] = dolp_blend[i];
      // Specular light polarizes perpendicular to the plane of incidence,
      // i.e. along the wrinkle, perpendicular to the slope direction.
      double phi = (gx == 0.0 && gy == 0.0) ? 0.0 : std::atan2(gy, gx) + 0.5 * kPi;
      phi = std::fmod(phi, kPi);
      if (phi < 0.0) phi += kPi;
      if (phi >= kPi) phi = 0.0;
      scene.hl_phi[i] = phi;
    }
  }
  return scene;
}

Field unpolarized_part(const FilmScene& scene) {
  Field u(scene.height(), scene.width());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::clamp(scene.im[i] + scene.id_field[i], 0.0, 1.0);
  return u;
}

StokesMap compose_stokes(const FilmScene& scene) {
  const Field u = unpolarized_part(scene);
  const int h = scene.height(), w = scene.width();
  StokesMap st{Field(h, w), Field(h, w), Field(h, w)};
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double pol = scene.hl_s0[i] * scene.hl_dolp[i];
    st.s0[i] = u[i] + scene.hl_s0[i];
    st.s1[i] = pol * std::cos(2.0 * scene.hl_phi[i]);
    st.s2[i] = pol * std::sin(2.0 * scene.hl_phi[i]);
  }
  return st;
}

RenderedCapture render_captures(const FilmScene& scene, double noise_sigma) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ParameterError("noise_sigma must be a non-negative finite number");
  }
  for (const Field* f : {&scene.id_field, &scene.hl_s0, &scene.hl_dolp, &scene.hl_phi}) {
    require_same_shape(scene.im, *f, "render_captures");
  }
  RenderedCapture out;
  out.stack = captures_from_stokes(compose_stokes(scene));
  if (noise_sigma > 0.0) {
    Rng noise = stream_rng(scene.seed, kNoiseStream);
    for (int k = 0; k < 4; ++k) {
      for (double& v : out.stack.channel(k).values()) v += noise_sigma * noise.normal();
    }
  }
  for (int k = 0; k < 4; ++k) {
    for (double& v : out.stack.channel(k).values()) v = std::clamp(v, 0.0, 1.0);
  }
  out.gt = scene.im;
  return out;
}

}  // namespace polarfilm

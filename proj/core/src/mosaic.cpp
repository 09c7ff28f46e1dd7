#include "polarfilm/mosaic.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <string>

#include "polarfilm/error.hpp"

namespace polarfilm {

namespace {

void require_even(const Field& f, const char* what) {
  if (f.height() % 2 != 0 || f.width() % 2 != 0 || f.empty()) {
    throw ShapeError(std::string(what) + ": dimensions must be even and non-zero, got " +
                     std::to_string(f.height()) + "x" + std::to_string(f.width()));
  }
}

// Interpolation stencil of one channel at one pixel: up to four lattice
// samples with bilinear weights.
struct Stencil {
  int count = 0;
  std::array<int, 4> y{}, x{};
  std::array<double, 4> w{};
};

// The channel's samples sit at (2i + oy, 2j + ox). Pixels outside the sample
// lattice hull are clamped onto the border samples.
Stencil bilinear_stencil(int y, int x, int oy, int ox, int h, int w) {
  const int ny = h / 2, nx = w / 2;
  auto axis = [](int p, int o, int n, int& lo, int& hi, double& t) {
    const int d = p - o;
    if (d <= 0) {
      lo = hi = 0;
      t = 0.0;
    } else if (d >= 2 * (n - 1)) {
      lo = hi = n - 1;
      t = 0.0;
    } else {
      lo = d / 2;
      hi = lo + 1;
      t = (d % 2 == 0) ? 0.0 : 0.5;
    }
  };
  int y0, y1, x0, x1;
  double ty, tx;
  axis(y, oy, ny, y0, y1, ty);
  axis(x, ox, nx, x0, x1, tx);
  Stencil s;
  auto push = [&](int iy, int ix, double weight) {
    if (weight == 0.0) return;
    s.y[s.count] = 2 * iy + oy;
    s.x[s.count] = 2 * ix + ox;
    s.w[s.count] = weight;
    ++s.count;
  };
  push(y0, x0, (1.0 - ty) * (1.0 - tx));
  push(y0, x1, (1.0 - ty) * tx);
  push(y1, x0, ty * (1.0 - tx));
  push(y1, x1, ty * tx);
  return s;
}

PolarStack demosaic_subsample(const RawMosaic& raw) {
  const int h = raw.height(), w = raw.width();
  PolarStack out(h, w);
  for (int ch = 0; ch < 4; ++ch) {
    const auto [oy, ox] = raw.layout.offset_of(ch);
    Field& dst = out.channel(ch);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        dst(y, x) = raw.data((y & ~1) + oy, (x & ~1) + ox);
      }
    }
  }
  return out;
}

PolarStack demosaic_bilinear(const RawMosaic& raw) {
  const int h = raw.height(), w = raw.width();
  PolarStack out(h, w);
  for (int ch = 0; ch < 4; ++ch) {
    const auto [oy, ox] = raw.layout.offset_of(ch);
    Field& dst = out.channel(ch);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (raw.layout.at(y, x) == ch) {
          dst(y, x) = raw.data(y, x);
          continue;
        }
        const Stencil s = bilinear_stencil(y, x, oy, ox, h, w);
        double v = 0.0;
        for (int k = 0; k < s.count; ++k) v += s.w[k] * raw.data(s.y[k], s.x[k]);
        dst(y, x) = v;
      }
    }
  }
  return out;
}

// Guided residual interpolation: the guide is the mean of the bilinear
// channels; per-channel residuals at sample sites are spread with bilinear
// weights damped by guide differences, and added back onto the guide.
PolarStack demosaic_edge_aware(const RawMosaic& raw) {
  constexpr double kEdgeSoftness = 0.05;
  const int h = raw.height(), w = raw.width();
  const PolarStack base = demosaic_bilinear(raw);
  const Field guide = mean_intensity(base);

  PolarStack out(h, w);
  for (int ch = 0; ch < 4; ++ch) {
    const auto [oy, ox] = raw.layout.offset_of(ch);
    Field& dst = out.channel(ch);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (raw.layout.at(y, x) == ch) {
          dst(y, x) = raw.data(y, x);
          continue;
        }
        const Stencil s = bilinear_stencil(y, x, oy, ox, h, w);
        const double gp = guide(y, x);
        // Scale-free softening keeps the operator linear in the raw data.
        double scale = std::abs(gp);
        for (int k = 0; k < s.count; ++k) scale += std::abs(guide(s.y[k], s.x[k]));
        const double eps = kEdgeSoftness * scale / (s.count + 1) + 1e-300;
        double num = 0.0, den = 0.0;
        for (int k = 0; k < s.count; ++k) {
          const double gq = guide(s.y[k], s.x[k]);
          const double wk = s.w[k] / (std::abs(gp - gq) + eps);
          num += wk * (raw.data(s.y[k], s.x[k]) - gq);
          den += wk;
        }
        dst(y, x) = gp + num / den;
      }
    }
  }
  return out;
}

}  // namespace

std::array<int, 2> MosaicLayout::offset_of(int ch) const {
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      if (channel[r][c] == ch) return {r, c};
    }
  }
  throw ParameterError("mosaic layout has no position for channel " + std::to_string(ch));
}

void MosaicLayout::validate() const {
  std::array<int, 4> seen{};
  for (const auto& row : channel) {
    for (int ch : row) {
      if (ch < 0 || ch > 3) throw ParameterError("mosaic layout channel out of range");
      ++seen[ch];
    }
  }
  for (int n : seen) {
    if (n != 1) throw ParameterError("mosaic layout must place each channel exactly once");
  }
}

PolarStack decompose_raw(const RawMosaic& raw) {
  require_even(raw.data, "decompose_raw");
  raw.layout.validate();
  const int h = raw.height() / 2, w = raw.width() / 2;
  PolarStack out(h, w);
  for (int ch = 0; ch < 4; ++ch) {
    const auto [oy, ox] = raw.layout.offset_of(ch);
    Field& dst = out.channel(ch);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) dst(y, x) = raw.data(2 * y + oy, 2 * x + ox);
    }
  }
  return out;
}

PolarStack demosaic(const RawMosaic& raw, DemosaicMethod method) {
  require_even(raw.data, "demosaic");
  raw.layout.validate();
  require_finite(raw.data, "demosaic");
  switch (method) {
    case DemosaicMethod::Subsample: return demosaic_subsample(raw);
    case DemosaicMethod::Bilinear: return demosaic_bilinear(raw);
    case DemosaicMethod::EdgeAware: return demosaic_edge_aware(raw);
  }
  throw ParameterError("unknown demosaic method");
}

RawMosaic mosaic(const PolarStack& stack, const MosaicLayout& layout) {
  layout.validate();
  for (int k = 1; k < 4; ++k) require_same_shape(stack.i0, stack.channel(k), "mosaic");
  require_even(stack.i0, "mosaic");
  RawMosaic raw{Field(stack.height(), stack.width()), layout};
  for (int y = 0; y < raw.height(); ++y) {
    for (int x = 0; x < raw.width(); ++x) raw.data(y, x) = stack.channel(layout.at(y, x))(y, x);
  }
  return raw;
}

std::uint16_t to_sensor_code(double v) {
  const double scaled = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0) * 65535.0;
  // nearbyint honours the current rounding mode; force ties-to-even
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(scaled);
  std::fesetround(saved);
  return static_cast<std::uint16_t>(r);
}

}  // namespace polarfilm

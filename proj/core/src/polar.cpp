#include "polarfilm/polar.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polarfilm/error.hpp"

namespace polarfilm {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

Field& PolarStack::channel(int k) {
  switch (k) {
    case 0: return i0;
    case 1: return i45;
    case 2: return i90;
    case 3: return i135;
  }
  throw ParameterError("polar channel index out of range: " + std::to_string(k));
}

const Field& PolarStack::channel(int k) const {
  return const_cast<PolarStack*>(this)->channel(k);
}

void PolarStack::validate() const {
  for (int k = 1; k < 4; ++k) require_same_shape(i0, channel(k), "PolarStack");
  for (int k = 0; k < 4; ++k) {
    for (double v : channel(k).values()) {
      if (!std::isfinite(v)) throw DataError("PolarStack: non-finite intensity");
      if (v < 0.0) throw DataError("PolarStack: negative intensity");
    }
  }
}

void StokesMap::validate() const {
  require_same_shape(s0, s1, "StokesMap");
  require_same_shape(s0, s2, "StokesMap");
  for (const Field* f : {&s0, &s1, &s2}) require_finite(*f, "StokesMap");
}

StokesMap stokes_from_stack(const PolarStack& stack) {
  stack.validate();
  const int h = stack.height(), w = stack.width();
  StokesMap st{Field(h, w), Field(h, w), Field(h, w)};
  for (std::size_t i = 0; i < stack.i0.size(); ++i) {
    st.s0[i] = stack.i0[i] + stack.i90[i];
    st.s1[i] = stack.i0[i] - stack.i90[i];
    st.s2[i] = stack.i45[i] - stack.i135[i];
  }
  return st;
}

Field capture_at_angle(const StokesMap& st, const AngleMap& alpha) {
  st.validate();
  require_same_shape(st.s0, alpha.a, "capture_at_angle");
  Field out(st.height(), st.width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = capture_at_angle(st.s0[i], st.s1[i], st.s2[i], alpha.a[i]);
  }
  return out;
}

PolarStack captures_from_stokes(const StokesMap& st) {
  st.validate();
  PolarStack out(st.height(), st.width());
  for (std::size_t i = 0; i < st.s0.size(); ++i) {
    out.i0[i] = 0.5 * (st.s0[i] + st.s1[i]);
    out.i45[i] = 0.5 * (st.s0[i] + st.s2[i]);
    out.i90[i] = 0.5 * (st.s0[i] - st.s1[i]);
    out.i135[i] = 0.5 * (st.s0[i] - st.s2[i]);
  }
  return out;
}

double aop(double s1, double s2) {
  if (s1 == 0.0 && s2 == 0.0) return 0.0;
  double a = 0.5 * std::atan2(s2, s1);
  if (a < 0.0) a += kPi;
  // a tiny negative angle folds onto pi itself, which is 0 modulo pi
  if (a >= kPi) a = 0.0;
  return a;
}

AngleMap aop(const StokesMap& st, Field* degenerate) {
  st.validate();
  AngleMap out(st.height(), st.width(), 0.0);
  if (degenerate) *degenerate = Field(st.height(), st.width(), 0.0);
  for (std::size_t i = 0; i < st.s0.size(); ++i) {
    out.a[i] = aop(st.s1[i], st.s2[i]);
    if (degenerate && st.s1[i] == 0.0 && st.s2[i] == 0.0) (*degenerate)[i] = 1.0;
  }
  return out;
}

double dop(double s0, double s1, double s2) {
  if (!(s0 > kDopIntensityFloor)) return 0.0;
  return std::clamp(std::hypot(s1, s2) / s0, 0.0, 1.0);
}

Field dop(const StokesMap& st, Field* valid) {
  st.validate();
  Field out(st.height(), st.width());
  if (valid) *valid = Field(st.height(), st.width(), 0.0);
  for (std::size_t i = 0; i < st.s0.size(); ++i) {
    out[i] = dop(st.s0[i], st.s1[i], st.s2[i]);
    if (valid && st.s0[i] > kDopIntensityFloor) (*valid)[i] = 1.0;
  }
  return out;
}

ExtremaPair extrema(const StokesMap& st, ExtremaMode mode) {
  st.validate();
  ExtremaPair ex{Field(st.height(), st.width()), Field(st.height(), st.width()), mode};
  for (std::size_t i = 0; i < st.s0.size(); ++i) {
    const double l = std::hypot(st.s1[i], st.s2[i]);
    if (mode == ExtremaMode::PhysConsistent) {
      ex.imax[i] = 0.5 * (st.s0[i] + l);
      ex.imin[i] = 0.5 * (st.s0[i] - l);
    } else {
      ex.imax[i] = st.s0[i] + 0.5 * l;
      ex.imin[i] = st.s0[i] - 0.5 * l;
    }
  }
  return ex;
}

Field malus_eval(const ExtremaPair& ex, const AngleMap& theta) {
  require_same_shape(ex.imax, ex.imin, "malus_eval");
  require_same_shape(ex.imax, theta.a, "malus_eval");
  Field out(theta.height(), theta.width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = malus_eval(ex.imax[i], ex.imin[i], theta.a[i]);
  }
  return out;
}

Field gamma_correct(const Field& in, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ParameterError("gamma must be positive, got " + std::to_string(gamma));
  }
  const double inv = 1.0 / gamma;
  Field out(in.height(), in.width());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = std::clamp(in[i], 0.0, 1.0);
    out[i] = std::pow(v, inv);
  }
  return out;
}

Field mean_intensity(const PolarStack& stack) {
  stack.validate();
  Field out(stack.height(), stack.width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.25 * (stack.i0[i] + stack.i45[i] + stack.i90[i] + stack.i135[i]);
  }
  return out;
}

Field intensity_gt(const PolarStack& stack, double gamma) {
  return gamma_correct(mean_intensity(stack), gamma);
}

double consistency_residual(const PolarStack& stack) {
  stack.validate();
  double m = 0.0;
  for (std::size_t i = 0; i < stack.i0.size(); ++i) {
    m = std::max(m, std::abs((stack.i0[i] + stack.i90[i]) - (stack.i45[i] + stack.i135[i])));
  }
  return m;
}

}  // namespace polarfilm

#pragma once

#include <cmath>

#include "polarfilm/field.hpp"
#include "polarfilm/polar.hpp"
#include "polarfilm/rng.hpp"

namespace polarfilm::testing {

inline Field random_field(int h, int w, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Field f(h, w);
  for (double& v : f.values()) v = rng.uniform(lo, hi);
  return f;
}

/// Stokes map of a physically valid scene: L <= s0 everywhere.
inline StokesMap random_stokes(int h, int w, Rng& rng) {
  StokesMap st{Field(h, w), Field(h, w), Field(h, w)};
  for (std::size_t i = 0; i < st.s0.size(); ++i) {
    const double s0 = rng.uniform(0.0, 1.0);
    const double l = s0 * rng.uniform();
    const double phi = rng.uniform(0.0, std::numbers::pi);
    st.s0[i] = s0;
    st.s1[i] = l * std::cos(2 * phi);
    st.s2[i] = l * std::sin(2 * phi);
  }
  return st;
}

inline PolarStack random_stack(int h, int w, Rng& rng) {
  PolarStack s(h, w);
  for (int k = 0; k < 4; ++k) s.channel(k) = random_field(h, w, rng);
  return s;
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace polarfilm::testing

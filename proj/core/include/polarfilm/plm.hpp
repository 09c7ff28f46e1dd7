#pragma once

#include "polarfilm/field.hpp"
#include "polarfilm/polar.hpp"

namespace polarfilm {

enum class PriorSource { Analytic, Network };

/// Minimal-highlight prior P.
struct PriorField {
  Field p;
  ExtremaMode mode = ExtremaMode::PhysConsistent;
  PriorSource source = PriorSource::Analytic;
};

/// P = imax cos^2(A) + imin sin^2(A), where A is the offset from the
/// per-pixel polarization axis. The unpolarized diffuse and degradation
/// terms already sit inside both imax and imin, so they are not added again.
PriorField plm_prior(const StokesMap& st, const AngleMap& angle,
                     ExtremaMode mode = ExtremaMode::PhysConsistent,
                     PriorSource source = PriorSource::Network);

/// Closed-form minimizer over the angle: A = pi/2 everywhere.
PriorField analytic_prior(const StokesMap& st);

/// max(0, mean of captures - P). Large values mark specular regions.
Field highlight_location(const PolarStack& stack, const PriorField& prior);

}  // namespace polarfilm

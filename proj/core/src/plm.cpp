#include "polarfilm/plm.hpp"

#include <algorithm>
#include <numbers>

#include "polarfilm/error.hpp"

namespace polarfilm {

PriorField plm_prior(const StokesMap& st, const AngleMap& angle, ExtremaMode mode, PriorSource source) {
  require_same_shape(st.s0, angle.a, "plm_prior");
  const ExtremaPair ex = extrema(st, mode);
  return PriorField{malus_eval(ex, angle), mode, source};
}

PriorField analytic_prior(const StokesMap& st) {
  const AngleMap optimum(st.height(), st.width(), std::numbers::pi / 2.0);
  return plm_prior(st, optimum, ExtremaMode::PhysConsistent, PriorSource::Analytic);
}

Field highlight_location(const PolarStack& stack, const PriorField& prior) {
  const Field mean = mean_intensity(stack);
  require_same_shape(mean, prior.p, "highlight_location");
  Field out(mean.height(), mean.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, mean[i] - prior.p[i]);
  return out;
}

}  // namespace polarfilm

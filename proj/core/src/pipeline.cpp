#include "polarfilm/pipeline.hpp"

#include <numbers>

#include "polarfilm/error.hpp"
#include "polarfilm/rng.hpp"

namespace polarfilm {

std::string to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::Full: return "full";
    case PipelineMode::NoPrior: return "no_prior";
    case PipelineMode::NoAopDop: return "no_aop_dop";
    case PipelineMode::NoPolar: return "no_polar";
  }
  return "unknown";
}

PipelineMode pipeline_mode_from_string(const std::string& name) {
  if (name == "full") return PipelineMode::Full;
  if (name == "no_prior") return PipelineMode::NoPrior;
  if (name == "no_aop_dop") return PipelineMode::NoAopDop;
  if (name == "no_polar") return PipelineMode::NoPolar;
  throw ParameterError("unknown pipeline mode '" + name + "' (expected full, no_prior, no_aop_dop, no_polar)");
}

bool uses_anet(PipelineMode mode) { return mode == PipelineMode::Full || mode == PipelineMode::NoAopDop; }

int rnet_input_channels(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::Full:
    case PipelineMode::NoAopDop: return 5;
    case PipelineMode::NoPrior: return 4;
    case PipelineMode::NoPolar: return 1;
  }
  return 0;
}

template <typename S>
PipelineInputs<S> make_inputs(std::span<const PolarStack> stacks) {
  if (stacks.empty()) throw ShapeError("make_inputs: empty batch");
  const int n = static_cast<int>(stacks.size());
  const int h = stacks.front().height(), w = stacks.front().width();
  PipelineInputs<S> in{Tensor<S>(n, 4, h, w), Tensor<S>(n, 2, h, w), Tensor<S>(n, 1, h, w),
                       Tensor<S>(n, 1, h, w), Tensor<S>(n, 1, h, w)};
  for (int b = 0; b < n; ++b) {
    const PolarStack& st = stacks[static_cast<std::size_t>(b)];
    if (st.height() != h || st.width() != w) throw ShapeError("make_inputs: stacks differ in size");
    const StokesMap stokes = stokes_from_stack(st);
    const AngleMap angle = aop(stokes);
    const Field degree = dop(stokes);
    const ExtremaPair ex = extrema(stokes, ExtremaMode::PhysConsistent);
    const Field mean = mean_intensity(st);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      for (int k = 0; k < 4; ++k) in.captures.plane(b, k)[i] = static_cast<S>(st.channel(k)[i]);
      in.aop_dop.plane(b, 0)[i] = static_cast<S>(angle.a[i] / std::numbers::pi);
      in.aop_dop.plane(b, 1)[i] = static_cast<S>(degree[i]);
      in.imax.plane(b, 0)[i] = static_cast<S>(ex.imax[i]);
      in.imin.plane(b, 0)[i] = static_cast<S>(ex.imin[i]);
      in.intensity.plane(b, 0)[i] = static_cast<S>(mean[i]);
    }
  }
  return in;
}

template PipelineInputs<float> make_inputs<float>(std::span<const PolarStack>);
template PipelineInputs<double> make_inputs<double>(std::span<const PolarStack>);
template PipelineInputs<long double> make_inputs<long double>(std::span<const PolarStack>);

template <typename S>
Pipeline<S>::Pipeline(const PipelineSpec& spec, std::uint64_t seed)
    : spec_(spec), rnet_(build_rnet<S>(spec.rnet, rnet_input_channels(spec.mode))) {
  if (uses_anet(spec.mode)) {
    anet_.emplace(build_anet<S>(spec.anet, spec.mode == PipelineMode::Full));
    anet_->init_kaiming(splitmix64(seed ^ 0xA7E7ULL));
  }
  rnet_.init_kaiming(splitmix64(seed ^ 0x12E7ULL));
}

template <typename S>
typename Pipeline<S>::Outputs Pipeline<S>::forward(Tape<S>& tape, const PipelineInputs<S>& in) {
  Outputs out;
  const Var<S> captures = tape.constant(in.captures);
  switch (spec_.mode) {
    case PipelineMode::NoPolar:
      out.reconstruction = rnet_.forward(tape, tape.constant(in.intensity));
      return out;
    case PipelineMode::NoPrior:
      out.reconstruction = rnet_.forward(tape, captures);
      return out;
    case PipelineMode::Full:
    case PipelineMode::NoAopDop: {
      Var<S> anet_in = captures;
      if (spec_.mode == PipelineMode::Full) {
        const Var<S> parts[] = {captures, tape.constant(in.aop_dop)};
        anet_in = ad::concat<S>(parts);
      }
      out.angle = anet_->forward(tape, anet_in);
      out.prior = ad::malus(tape.constant(in.imax), tape.constant(in.imin), out.angle);
      const Var<S> parts[] = {captures, out.prior};
      out.reconstruction = rnet_.forward(tape, ad::concat<S>(parts));
      return out;
    }
  }
  throw StateError("unhandled pipeline mode");
}

template <typename S>
std::vector<std::pair<std::string, Parameter<S>*>> Pipeline<S>::named_parameters() {
  std::vector<std::pair<std::string, Parameter<S>*>> out;
  if (anet_) {
    for (auto& p : anet_->parameters()) out.emplace_back("anet." + p.name, &p);
  }
  for (auto& p : rnet_.parameters()) out.emplace_back("rnet." + p.name, &p);
  return out;
}

template <typename S>
std::vector<std::pair<std::string, const Parameter<S>*>> Pipeline<S>::named_parameters() const {
  std::vector<std::pair<std::string, const Parameter<S>*>> out;
  for (auto& [name, p] : const_cast<Pipeline*>(this)->named_parameters()) out.emplace_back(name, p);
  return out;
}

template <typename S>
std::size_t Pipeline<S>::parameter_count() const {
  return (anet_ ? anet_->parameter_count() : 0) + rnet_.parameter_count();
}

template <typename S>
void Pipeline<S>::zero_grad() {
  if (anet_) anet_->zero_grad();
  rnet_.zero_grad();
}

template <typename S>
AngleMap Pipeline<S>::infer_angle(const PolarStack& stack) const {
  if (!anet_) throw StateError("pipeline mode '" + to_string(spec_.mode) + "' has no angle network");
  const PolarStack one[] = {stack};
  const PipelineInputs<S> in = make_inputs<S>(one);
  Tensor<S> x = in.captures;
  if (spec_.mode == PipelineMode::Full) {
    Tape<S> tape(false);
    const Var<S> parts[] = {tape.constant(in.captures), tape.constant(in.aop_dop)};
    x = ad::concat<S>(parts).value();
  }
  const Tensor<S> a = anet_->forward(x);
  AngleMap out(stack.height(), stack.width(), 0.0);
  for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] = static_cast<double>(a[i]);
  return out;
}

template <typename S>
Field Pipeline<S>::reconstruct_with_prior(const PolarStack& stack, const PriorField* prior) const {
  const PolarStack one[] = {stack};
  const PipelineInputs<S> in = make_inputs<S>(one);
  Tensor<S> x;
  switch (spec_.mode) {
    case PipelineMode::NoPolar: x = in.intensity; break;
    case PipelineMode::NoPrior: x = in.captures; break;
    case PipelineMode::Full:
    case PipelineMode::NoAopDop: {
      if (!prior) throw StateError("reconstruct: mode '" + to_string(spec_.mode) + "' needs a prior");
      if (prior->p.height() != stack.height() || prior->p.width() != stack.width()) {
        throw ShapeError("reconstruct: prior and stack differ in size");
      }
      x = Tensor<S>(1, 5, stack.height(), stack.width());
      const std::size_t hw = x.plane_size();
      for (int k = 0; k < 4; ++k) std::copy_n(in.captures.plane(0, k), hw, x.plane(0, k));
      for (std::size_t i = 0; i < hw; ++i) x.plane(0, 4)[i] = static_cast<S>(prior->p[i]);
      break;
    }
  }
  const Tensor<S> y = rnet_.forward(x);
  Field out(stack.height(), stack.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(y[i]);
  return out;
}

template <typename S>
Field Pipeline<S>::reconstruct(const PolarStack& stack) const {
  if (!uses_anet(spec_.mode)) return reconstruct_with_prior(stack, nullptr);
  const StokesMap st = stokes_from_stack(stack);
  const PriorField prior = plm_prior(st, infer_angle(stack));
  return reconstruct_with_prior(stack, &prior);
}

template class Pipeline<float>;
template class Pipeline<double>;
template class Pipeline<long double>;

}  // namespace polarfilm

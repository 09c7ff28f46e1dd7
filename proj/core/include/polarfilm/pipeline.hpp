#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polarfilm/autodiff.hpp"
#include "polarfilm/network.hpp"
#include "polarfilm/plm.hpp"
#include "polarfilm/polar.hpp"

namespace polarfilm {

/// Wiring variants: the full method and the three ablations.
enum class PipelineMode {
  Full,      // A-Net(captures, AoP, DoP) -> PLM prior -> R-Net(captures, prior)
  NoPrior,   // R-Net(captures)
  NoAopDop,  // A-Net(captures) -> PLM prior -> R-Net(captures, prior)
  NoPolar,   // R-Net(mean intensity)
};

std::string to_string(PipelineMode mode);
/// Accepts full, no_prior, no_aop_dop, no_polar.
PipelineMode pipeline_mode_from_string(const std::string& name);

bool uses_anet(PipelineMode mode);
int rnet_input_channels(PipelineMode mode);

struct PipelineSpec {
  PipelineMode mode = PipelineMode::Full;
  RdnDescriptor anet;
  RdnDescriptor rnet;

  bool operator==(const PipelineSpec&) const = default;
};

/// Per-pixel network inputs derived from captures, stacked along the batch.
template <typename S>
struct PipelineInputs {
  Tensor<S> captures;   // (N, 4, H, W): 0, 45, 90, 135 degrees
  Tensor<S> aop_dop;    // (N, 2, H, W): AoP / pi, DoP
  Tensor<S> imax;       // (N, 1, H, W), PhysConsistent extrema
  Tensor<S> imin;       // (N, 1, H, W)
  Tensor<S> intensity;  // (N, 1, H, W): mean of the captures
};

/// Computes network inputs for a batch of equally-sized stacks.
template <typename S>
PipelineInputs<S> make_inputs(std::span<const PolarStack> stacks);

/// A-Net, PLM and R-Net wired for one mode.
template <typename S>
class Pipeline {
 public:
  /// Kaiming-initialized networks; A-Net and R-Net draw from child seeds.
  Pipeline(const PipelineSpec& spec, std::uint64_t seed);

  const PipelineSpec& spec() const { return spec_; }
  PipelineMode mode() const { return spec_.mode; }

  struct Outputs {
    Var<S> reconstruction;
    Var<S> angle;  // invalid when the mode has no A-Net
    Var<S> prior;  // invalid when the mode has no prior
  };
  /// Records the full graph on `tape`; the PLM term stays differentiable in A.
  Outputs forward(Tape<S>& tape, const PipelineInputs<S>& in);

  /// Parameters with "anet." / "rnet." prefixes, in a stable order.
  std::vector<std::pair<std::string, Parameter<S>*>> named_parameters();
  std::vector<std::pair<std::string, const Parameter<S>*>> named_parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  std::optional<Network<S>>& anet() { return anet_; }
  const std::optional<Network<S>>& anet() const { return anet_; }
  Network<S>& rnet() { return rnet_; }
  const Network<S>& rnet() const { return rnet_; }

  /// Staged inference, each step in 64-bit outside the network calls.
  /// Angle map from A-Net; throws StateError for modes without A-Net.
  AngleMap infer_angle(const PolarStack& stack) const;
  /// R-Net given an explicit prior (ignored by modes without prior).
  Field reconstruct_with_prior(const PolarStack& stack, const PriorField* prior) const;
  /// demosaicked stack -> Stokes -> A-Net -> prior -> R-Net.
  Field reconstruct(const PolarStack& stack) const;

 private:
  PipelineSpec spec_;
  std::optional<Network<S>> anet_;
  Network<S> rnet_;
};

extern template class Pipeline<float>;
extern template class Pipeline<double>;

}  // namespace polarfilm

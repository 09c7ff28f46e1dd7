#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "polarfilm/autodiff.hpp"
#include "polarfilm/tensor.hpp"

namespace polarfilm {

enum class LayerKind { Input, Conv, Relu, Concat, Add, Head };

/// One node of a network graph. Inputs refer to earlier layers by index,
/// which makes every graph acyclic by construction.
struct Layer {
  LayerKind kind = LayerKind::Input;
  std::string name;
  std::vector<int> inputs;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  /// Head only: output = head_scale * sigmoid(x).
  double head_scale = 1.0;
};

/// Residual dense network sizing.
struct RdnDescriptor {
  int blocks = 3;    // dense blocks D
  int convs = 4;     // convolutions per block C
  int growth = 8;    // growth rate G
  int features = 16; // base feature channels F

  void validate() const;
  bool operator==(const RdnDescriptor&) const = default;
};

/// Untyped network description; the last layer is the output.
struct NetworkSpec {
  int input_channels = 0;
  std::vector<Layer> layers;

  /// Throws ShapeError when a layer references a later layer or channel
  /// counts do not line up.
  void validate() const;
  int output_channels() const { return layers.empty() ? 0 : layers.back().out_channels; }
};

/// Incrementally assembles a NetworkSpec, tracking channel counts.
class NetworkBuilder {
 public:
  explicit NetworkBuilder(int input_channels);

  int input() const { return 0; }
  int conv(const std::string& name, int x, int out_channels, int kernel);
  int relu(int x);
  int concat(const std::vector<int>& xs);
  int add(int a, int b);
  int head(int x, double scale);
  int channels(int layer) const { return spec_.layers.at(static_cast<std::size_t>(layer)).out_channels; }

  NetworkSpec build() const;

 private:
  int append(Layer layer);
  NetworkSpec spec_;
};

/// RDN: shallow features, D residual dense blocks, global fusion with a
/// global residual, a 3x3 output conv to one channel and a scaled sigmoid head.
NetworkSpec rdn_spec(const RdnDescriptor& desc, int input_channels, double head_scale);

/// Closed-form parameter count of rdn_spec(desc, input_channels, .).
std::size_t rdn_parameter_count(const RdnDescriptor& desc, int input_channels);

/// A network instantiated with parameters of scalar type S.
template <typename S>
class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  int input_channels() const { return spec_.input_channels; }
  int output_channels() const { return spec_.output_channels(); }

  /// Records the forward pass on `tape`.
  Var<S> forward(Tape<S>& tape, const Var<S>& x);
  /// Inference without gradient recording.
  Tensor<S> forward(const Tensor<S>& x) const;

  std::vector<Parameter<S>>& parameters() { return params_; }
  const std::vector<Parameter<S>>& parameters() const { return params_; }
  Parameter<S>& parameter(const std::string& name);
  const Parameter<S>& parameter(const std::string& name) const;
  std::size_t parameter_count() const;

  /// He-normal weights (std = sqrt(2 / fan_in)), zero biases.
  void init_kaiming(std::uint64_t seed);
  void zero_grad();

 private:
  NetworkSpec spec_;
  std::vector<Parameter<S>> params_;
  // layer index -> index of its weight in params_ (bias follows), or -1
  std::vector<int> param_slot_;
};

/// Angle-estimation network: 6 inputs (captures, AoP, DoP) or 4 without
/// AoP/DoP; output in [0, pi).
template <typename S>
Network<S> build_anet(const RdnDescriptor& desc, bool with_aop_dop = true);

/// Reconstruction network with `input_channels` inputs (5 by default:
/// captures and prior); output in [0, 1].
template <typename S>
Network<S> build_rnet(const RdnDescriptor& desc, int input_channels = 5);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace polarfilm

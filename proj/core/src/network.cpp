#include "polarfilm/network.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "polarfilm/error.hpp"
#include "polarfilm/rng.hpp"

namespace polarfilm {

void RdnDescriptor::validate() const {
  if (blocks < 1 || convs < 1 || growth < 1 || features < 1) {
    throw ParameterError("RDN descriptor entries must be positive");
  }
}

void NetworkSpec::validate() const {
  if (input_channels < 1) throw ShapeError("network must have at least one input channel");
  if (layers.empty() || layers.front().kind != LayerKind::Input) {
    throw ShapeError("network must start with an input layer");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    for (int in : l.inputs) {
      if (in < 0 || static_cast<std::size_t>(in) >= i) {
        throw ShapeError("layer '" + l.name + "' references a non-preceding layer");
      }
    }
    auto in_ch = [&](std::size_t j) { return layers[static_cast<std::size_t>(l.inputs[j])].out_channels; };
    switch (l.kind) {
      case LayerKind::Input:
        if (i != 0 || l.out_channels != input_channels) throw ShapeError("malformed input layer");
        break;
      case LayerKind::Conv:
        if (l.inputs.size() != 1 || in_ch(0) != l.in_channels || l.kernel % 2 == 0 || l.out_channels < 1) {
          throw ShapeError("conv layer '" + l.name + "' has inconsistent channels or kernel");
        }
        break;
      case LayerKind::Relu:
      case LayerKind::Head:
        if (l.inputs.size() != 1 || in_ch(0) != l.out_channels) {
          throw ShapeError("layer '" + l.name + "' must preserve channel count");
        }
        break;
      case LayerKind::Concat: {
        int sum = 0;
        for (std::size_t j = 0; j < l.inputs.size(); ++j) sum += in_ch(j);
        if (l.inputs.empty() || sum != l.out_channels) throw ShapeError("concat '" + l.name + "' channel mismatch");
        break;
      }
      case LayerKind::Add:
        if (l.inputs.size() != 2 || in_ch(0) != in_ch(1) || in_ch(0) != l.out_channels) {
          throw ShapeError("add '" + l.name + "' channel mismatch");
        }
        break;
    }
  }
}

NetworkBuilder::NetworkBuilder(int input_channels) {
  spec_.input_channels = input_channels;
  Layer in;
  in.kind = LayerKind::Input;
  in.name = "input";
  in.out_channels = input_channels;
  spec_.layers.push_back(in);
}

int NetworkBuilder::append(Layer layer) {
  spec_.layers.push_back(std::move(layer));
  return static_cast<int>(spec_.layers.size()) - 1;
}

int NetworkBuilder::conv(const std::string& name, int x, int out_channels, int kernel) {
  Layer l;
  l.kind = LayerKind::Conv;
  l.name = name;
  l.inputs = {x};
  l.in_channels = channels(x);
  l.out_channels = out_channels;
  l.kernel = kernel;
  return append(std::move(l));
}

int NetworkBuilder::relu(int x) {
  Layer l;
  l.kind = LayerKind::Relu;
  l.name = "relu" + std::to_string(spec_.layers.size());
  l.inputs = {x};
  l.out_channels = channels(x);
  return append(std::move(l));
}

int NetworkBuilder::concat(const std::vector<int>& xs) {
  Layer l;
  l.kind = LayerKind::Concat;
  l.name = "concat" + std::to_string(spec_.layers.size());
  l.inputs = xs;
  for (int x : xs) l.out_channels += channels(x);
  return append(std::move(l));
}

int NetworkBuilder::add(int a, int b) {
  Layer l;
  l.kind = LayerKind::Add;
  l.name = "add" + std::to_string(spec_.layers.size());
  l.inputs = {a, b};
  l.out_channels = channels(a);
  return append(std::move(l));
}

int NetworkBuilder::head(int x, double scale) {
  Layer l;
  l.kind = LayerKind::Head;
  l.name = "head";
  l.inputs = {x};
  l.out_channels = channels(x);
  l.head_scale = scale;
  return append(std::move(l));
}

NetworkSpec NetworkBuilder::build() const {
  spec_.validate();
  return spec_;
}

NetworkSpec rdn_spec(const RdnDescriptor& desc, int input_channels, double head_scale) {
  desc.validate();
  const int f = desc.features, g = desc.growth;
  NetworkBuilder b(input_channels);
  const int sfe1 = b.conv("sfe1", b.input(), f, 3);
  int x = b.conv("sfe2", sfe1, f, 3);
  std::vector<int> block_outputs;
  for (int d = 0; d < desc.blocks; ++d) {
    const std::string prefix = "rdb" + std::to_string(d);
    std::vector<int> dense = {x};
    for (int c = 0; c < desc.convs; ++c) {
      const int in = dense.size() == 1 ? dense.front() : b.concat(dense);
      const int y = b.relu(b.conv(prefix + ".conv" + std::to_string(c), in, g, 3));
      dense.push_back(y);
    }
    const int fused = b.conv(prefix + ".lff", b.concat(dense), f, 1);
    x = b.add(fused, x);
    block_outputs.push_back(x);
  }
  const int all = block_outputs.size() == 1 ? block_outputs.front() : b.concat(block_outputs);
  const int gff = b.conv("gff2", b.conv("gff1", all, f, 1), f, 3);
  const int global = b.add(gff, sfe1);
  b.head(b.conv("out", global, 1, 3), head_scale);
  return b.build();
}

std::size_t rdn_parameter_count(const RdnDescriptor& desc, int input_channels) {
  desc.validate();
  const std::size_t f = desc.features, g = desc.growth, c = desc.convs, d = desc.blocks;
  const std::size_t in = input_channels;
  std::size_t n = 9 * in * f + f;  // sfe1
  n += 9 * f * f + f;              // sfe2
  std::size_t block = 0;
  for (std::size_t i = 0; i < c; ++i) block += 9 * (f + i * g) * g + g;
  block += (f + c * g) * f + f;    // local fusion
  n += d * block;
  n += d * f * f + f;              // gff1
  n += 9 * f * f + f;              // gff2
  n += 9 * f + 1;                  // out
  return n;
}

template <typename S>
Network<S>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  param_slot_.assign(spec_.layers.size(), -1);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const Layer& l = spec_.layers[i];
    if (l.kind != LayerKind::Conv) continue;
    param_slot_[i] = static_cast<int>(params_.size());
    Parameter<S> w{l.name + ".weight", Tensor<S>(l.out_channels, l.in_channels, l.kernel, l.kernel), {}};
    Parameter<S> b{l.name + ".bias", Tensor<S>(l.out_channels, 1, 1, 1), {}};
    w.zero_grad();
    b.zero_grad();
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (params_[i].name == params_[j].name) throw ShapeError("duplicate parameter name " + params_[i].name);
    }
  }
}

template <typename S>
Var<S> Network<S>::forward(Tape<S>& tape, const Var<S>& x) {
  if (x.value().channels() != spec_.input_channels) {
    throw ShapeError("network expects " + std::to_string(spec_.input_channels) + " input channels, got " +
                     std::to_string(x.value().channels()));
  }
  std::vector<Var<S>> out(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const Layer& l = spec_.layers[i];
    auto in = [&](std::size_t j) -> const Var<S>& { return out[static_cast<std::size_t>(l.inputs[j])]; };
    switch (l.kind) {
      case LayerKind::Input: out[i] = x; break;
      case LayerKind::Conv: {
        const int slot = param_slot_[i];
        const Var<S> w = tape.parameter(params_[static_cast<std::size_t>(slot)]);
        const Var<S> b = tape.parameter(params_[static_cast<std::size_t>(slot) + 1]);
        out[i] = ad::conv2d(in(0), w, b);
        break;
      }
      case LayerKind::Relu: out[i] = ad::relu(in(0)); break;
      case LayerKind::Head: out[i] = ad::scaled_sigmoid(in(0), static_cast<S>(l.head_scale)); break;
      case LayerKind::Add: out[i] = ad::add(in(0), in(1)); break;
      case LayerKind::Concat: {
        std::vector<Var<S>> parts;
        for (std::size_t j = 0; j < l.inputs.size(); ++j) parts.push_back(in(j));
        out[i] = ad::concat<S>(parts);
        break;
      }
    }
  }
  return out.back();
}

template <typename S>
Tensor<S> Network<S>::forward(const Tensor<S>& x) const {
  // a non-recording tape never touches parameter gradients
  Tape<S> tape(false);
  return const_cast<Network*>(this)->forward(tape, tape.constant(x)).value();
}

template <typename S>
Parameter<S>& Network<S>::parameter(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw ParameterError("no parameter named '" + name + "'");
}

template <typename S>
const Parameter<S>& Network<S>::parameter(const std::string& name) const {
  return const_cast<Network*>(this)->parameter(name);
}

template <typename S>
std::size_t Network<S>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename S>
void Network<S>::init_kaiming(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (param_slot_[i] < 0) continue;
    Parameter<S>& w = params_[static_cast<std::size_t>(param_slot_[i])];
    Parameter<S>& b = params_[static_cast<std::size_t>(param_slot_[i]) + 1];
    const auto& sh = w.value.shape();
    const double fan_in = static_cast<double>(sh[1]) * sh[2] * sh[3];
    const double stddev = std::sqrt(2.0 / fan_in);
    for (S& v : w.value.values()) v = static_cast<S>(stddev * rng.normal());
    b.value.fill(S(0));
  }
  zero_grad();
}

template <typename S>
void Network<S>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class Network<float>;
template class Network<double>;
template class Network<long double>;

template <typename S>
Network<S> build_anet(const RdnDescriptor& desc, bool with_aop_dop) {
  return Network<S>(rdn_spec(desc, with_aop_dop ? 6 : 4, std::numbers::pi));
}

template <typename S>
Network<S> build_rnet(const RdnDescriptor& desc, int input_channels) {
  return Network<S>(rdn_spec(desc, input_channels, 1.0));
}

template Network<float> build_anet<float>(const RdnDescriptor&, bool);
template Network<double> build_anet<double>(const RdnDescriptor&, bool);
template Network<long double> build_anet<long double>(const RdnDescriptor&, bool);
template Network<float> build_rnet<float>(const RdnDescriptor&, int);
template Network<double> build_rnet<double>(const RdnDescriptor&, int);
template Network<long double> build_rnet<long double>(const RdnDescriptor&, int);

}  // namespace polarfilm

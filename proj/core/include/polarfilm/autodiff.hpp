#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "polarfilm/tensor.hpp"

namespace polarfilm {

/// Trainable tensor with its accumulated gradient.
template <typename S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;

  void zero_grad() { grad = Tensor<S>(value.shape()); }
};

template <typename S>
class Tape;

/// Handle to a node recorded on a Tape.
template <typename S>
class Var {
 public:
  Var() = default;
  Var(Tape<S>* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  Tape<S>& tape() const;
  int id() const { return id_; }
  const Tensor<S>& value() const;
  /// Gradient after Tape::backward; zeros if the node did not receive one.
  const Tensor<S>& grad() const;
  bool requires_grad() const;
  const typename Tensor<S>::Shape& shape() const { return value().shape(); }

 private:
  Tape<S>* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode recording of tensor operations. Nodes are appended in
/// execution order, so reverse insertion order is a valid topological order
/// for the backward sweep.
template <typename S>
class Tape {
 public:
  /// With `record` false no backward closures are kept (inference).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Validate every op output for NaN/Inf; throws DataError naming the op.
  void set_check_finite(bool on) { check_finite_ = on; }
  bool recording() const { return record_; }

  Var<S> constant(Tensor<S> value);
  Var<S> variable(Tensor<S> value);
  /// Leaf bound to a parameter; backward accumulates into `p.grad`.
  Var<S> parameter(Parameter<S>& p);

  /// Seeds d(loss)/d(loss) = 1 and runs the backward sweep. The loss must be
  /// a single-element node of this tape. A loss that does not depend on any
  /// differentiable leaf leaves all gradients untouched.
  void backward(const Var<S>& loss);

  std::size_t node_count() const { return nodes_.size(); }

  // Implementation surface for the op library.
  struct Node {
    Tensor<S> value;
    Tensor<S> grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;
    Parameter<S>* param = nullptr;
    const char* op = "";
  };
  Var<S> push(Tensor<S> value, bool requires_grad, std::function<void(Tape&)> backward, const char* op);
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  /// Gradient buffer of `id`, allocated on first use.
  Tensor<S>& grad_buffer(int id);

 private:
  std::vector<Node> nodes_;
  bool record_ = true;
  bool check_finite_ = false;
  bool consumed_ = false;
};

namespace ad {

/// 2-D convolution, stride 1, zero "same" padding. `weight` is
/// (Cout, Cin, k, k) with odd k; `bias` is (Cout, 1, 1, 1).
template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias);

template <typename S> Var<S> relu(const Var<S>& x);
template <typename S> Var<S> sigmoid(const Var<S>& x);
/// scale * sigmoid(x), kept strictly below `scale`.
template <typename S> Var<S> scaled_sigmoid(const Var<S>& x, S scale);
template <typename S> Var<S> add(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> sub(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> mul(const Var<S>& a, const Var<S>& b);
template <typename S> Var<S> scale(const Var<S>& x, S factor);
template <typename S> Var<S> shift(const Var<S>& x, S offset);
template <typename S> Var<S> cos(const Var<S>& x);
template <typename S> Var<S> sin(const Var<S>& x);
/// Concatenation along the channel axis.
template <typename S> Var<S> concat(std::span<const Var<S>> parts);
/// Mean over all elements, as a (1,1,1,1) tensor.
template <typename S> Var<S> mean(const Var<S>& x);
/// Mean absolute difference, as a (1,1,1,1) tensor.
template <typename S> Var<S> l1_loss(const Var<S>& pred, const Var<S>& target);
/// Detached copy: same value, no gradient path.
template <typename S> Var<S> detach(const Var<S>& x);

/// imax cos^2(angle) + imin sin^2(angle), built from the primitive ops.
template <typename S>
Var<S> malus(const Var<S>& imax, const Var<S>& imin, const Var<S>& angle);

}  // namespace ad

/// Plain-loss mean absolute error, used outside the tape.
template <typename S>
double l1_loss(const Tensor<S>& pred, const Tensor<S>& target);

extern template class Var<float>;
extern template class Var<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace polarfilm

#include "polarfilm/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <type_traits>

#include "polarfilm/error.hpp"

namespace polarfilm {

template <typename S>
Tensor<S>::Tensor(Shape shape, S fill) : shape_(shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("tensor dimensions must be non-negative: " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  data_.assign(n, fill);
}

template <typename S>
void Tensor<S>::fill(S v) {
  std::fill(data_.begin(), data_.end(), v);
}

std::string shape_string(const std::array<int, 4>& shape) {
  return "(" + std::to_string(shape[0]) + "," + std::to_string(shape[1]) + "," +
         std::to_string(shape[2]) + "," + std::to_string(shape[3]) + ")";
}

template class Tensor<float>;
template class Tensor<double>;
template class Tensor<long double>;

template <typename S>
Tape<S>& Var<S>::tape() const {
  if (!tape_) throw StateError("variable is not bound to a tape");
  return *tape_;
}

template <typename S>
const Tensor<S>& Var<S>::value() const {
  return tape().node(id_).value;
}

template <typename S>
const Tensor<S>& Var<S>::grad() const {
  return tape().grad_buffer(id_);
}

template <typename S>
bool Var<S>::requires_grad() const {
  return tape().node(id_).requires_grad;
}

template <typename S>
Var<S> Tape<S>::push(Tensor<S> value, bool requires_grad, std::function<void(Tape&)> backward,
                     const char* op) {
  if (consumed_) throw StateError(std::string(op) + ": tape already consumed by backward");
  if (check_finite_) {
    for (S v : value.values()) {
      if (!std::isfinite(v)) throw DataError(std::string("non-finite value produced by ") + op);
    }
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_ && requires_grad;
  if (n.requires_grad) n.backward = std::move(backward);
  n.op = op;
  nodes_.push_back(std::move(n));
  return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename S>
Var<S> Tape<S>::constant(Tensor<S> value) {
  return push(std::move(value), false, nullptr, "constant");
}

template <typename S>
Var<S> Tape<S>::variable(Tensor<S> value) {
  return push(std::move(value), true, nullptr, "variable");
}

template <typename S>
Var<S> Tape<S>::parameter(Parameter<S>& p) {
  Var<S> v = push(p.value, true, nullptr, "parameter");
  nodes_.back().param = &p;
  return v;
}

template <typename S>
Tensor<S>& Tape<S>::grad_buffer(int id) {
  Node& n = node(id);
  if (n.grad.size() != n.value.size()) n.grad = Tensor<S>(n.value.shape());
  return n.grad;
}

template <typename S>
void Tape<S>::backward(const Var<S>& loss) {
  if (!loss.valid() || &loss.tape() != this) {
    throw StateError("backward: loss was not produced by a forward pass on this tape");
  }
  if (!record_) throw StateError("backward: tape was created without gradient recording");
  if (consumed_) throw StateError("backward: graph already consumed");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be a single element, got " + shape_string(loss.value().shape()));
  }
  consumed_ = true;
  if (!node(loss.id()).requires_grad) return;
  grad_buffer(loss.id())[0] = S(1);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = node(id);
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this);
    if (n.param) {
      Parameter<S>& p = *n.param;
      if (!p.grad.same_shape(p.value)) p.zero_grad();
      // re-fetch: the backward closure never appends nodes, so `n` is stable
      for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
    }
  }
}

template class Var<float>;
template class Var<double>;
template class Var<long double>;
template class Tape<float>;
template class Tape<double>;
template class Tape<long double>;

namespace ad {

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapMat = Eigen::Map<RowMat<S>>;
template <typename S>
using CMapMat = Eigen::Map<const RowMat<S>>;

template <typename S>
void require_same(const Var<S>& a, const Var<S>& b, const char* op) {
  if (&a.tape() != &b.tape()) throw StateError(std::string(op) + ": operands live on different tapes");
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// Unfolds one sample (C, H, W) into a (C*k*k, H*W) matrix with zero padding.
template <typename S>
void im2col(const S* in, int c, int h, int w, int k, S* col) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    const S* plane = in + ci * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        S* row = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * hw;
        const int dx = kx - pad;
        const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          S* dst = row + static_cast<std::size_t>(y) * w;
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h || x_lo >= x_hi) {
            std::fill(dst, dst + w, S(0));
            continue;
          }
          const S* src = plane + static_cast<std::size_t>(sy) * w;
          std::fill(dst, dst + x_lo, S(0));
          std::memcpy(dst + x_lo, src + x_lo + dx, sizeof(S) * static_cast<std::size_t>(x_hi - x_lo));
          std::fill(dst + x_hi, dst + w, S(0));
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates a column matrix back into (C, H, W).
template <typename S>
void col2im_add(const S* col, int c, int h, int w, int k, S* out) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    S* plane = out + ci * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const S* row = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * hw;
        const int dx = kx - pad;
        const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          const S* src = row + static_cast<std::size_t>(y) * w;
          S* dst = plane + static_cast<std::size_t>(sy) * w;
          for (int x = x_lo; x < x_hi; ++x) dst[x + dx] += src[x];
        }
      }
    }
  }
}

template <typename S, typename F, typename G>
Var<S> unary(const Var<S>& x, F forward, G derivative, const char* op) {
  Tape<S>& tape = x.tape();
  const Tensor<S>& xv = x.value();
  Tensor<S> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = forward(xv[i]);
  const int xid = x.id();
  return tape.push(
      std::move(out), x.requires_grad(),
      [xid, derivative, self = static_cast<int>(tape.node_count())](Tape<S>& t) {
        const Tensor<S>& xv = t.node(xid).value;
        const Tensor<S>& yv = t.node(self).value;
        const Tensor<S>& gy = t.node(self).grad;
        Tensor<S>& gx = t.grad_buffer(xid);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * derivative(xv[i], yv[i]);
      },
      op);
}

}  // namespace

template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias) {
  Tape<S>& tape = x.tape();
  if (&weight.tape() != &tape || &bias.tape() != &tape) {
    throw StateError("conv2d: operands live on different tapes");
  }
  const Tensor<S>& xv = x.value();
  const Tensor<S>& wv = weight.value();
  const int n = xv.batch(), cin = xv.channels(), h = xv.height(), w = xv.width();
  const int cout = wv.batch(), k = wv.height();
  if (wv.channels() != cin) {
    throw ShapeError("conv2d: input has " + std::to_string(cin) + " channels, weight expects " +
                     std::to_string(wv.channels()));
  }
  if (k != wv.width() || k % 2 == 0) throw ShapeError("conv2d: kernel must be square and odd");
  if (bias.value().size() != static_cast<std::size_t>(cout)) {
    throw ShapeError("conv2d: bias must have one entry per output channel");
  }
  const int hw = h * w;
  const int rows = cin * k * k;
  Tensor<S> out(n, cout, h, w);
  const CMapMat<S> wm(wv.data(), cout, rows);
  const Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> bv(bias.value().data(), cout);
  AlignedVector<S> col(k == 1 ? 0 : static_cast<std::size_t>(rows) * hw);
  for (int b = 0; b < n; ++b) {
    MapMat<S> om(out.plane(b, 0), cout, hw);
    const S* src = xv.plane(b, 0);
    if (k != 1) {
      im2col(src, cin, h, w, k, col.data());
      src = col.data();
    }
    om.noalias() = wm * CMapMat<S>(src, rows, hw);
    om.colwise() += bv;
  }
  const bool rg = x.requires_grad() || weight.requires_grad() || bias.requires_grad();
  const int xid = x.id(), wid = weight.id(), bid = bias.id();
  const int self = static_cast<int>(tape.node_count());
  return tape.push(
      std::move(out), rg,
      [=](Tape<S>& t) {
        const Tensor<S>& xv = t.node(xid).value;
        const Tensor<S>& wv = t.node(wid).value;
        const Tensor<S>& gy = t.node(self).grad;
        const bool gx_needed = t.node(xid).requires_grad;
        const bool gw_needed = t.node(wid).requires_grad;
        const bool gb_needed = t.node(bid).requires_grad;
        AlignedVector<S> col(k == 1 ? 0 : static_cast<std::size_t>(rows) * hw);
        AlignedVector<S> gcol(k == 1 || !gx_needed ? 0 : static_cast<std::size_t>(rows) * hw);
        const CMapMat<S> wm(wv.data(), cout, rows);
        for (int b = 0; b < n; ++b) {
          const CMapMat<S> gym(gy.plane(b, 0), cout, hw);
          if (gw_needed) {
            const S* src = xv.plane(b, 0);
            if (k != 1) {
              im2col(src, cin, h, w, k, col.data());
              src = col.data();
            }
            MapMat<S> gwm(t.grad_buffer(wid).data(), cout, rows);
            gwm.noalias() += gym * CMapMat<S>(src, rows, hw).transpose();
          }
          if (gb_needed) {
            Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>> gbv(t.grad_buffer(bid).data(), cout);
            gbv += gym.rowwise().sum();
          }
          if (gx_needed) {
            Tensor<S>& gx = t.grad_buffer(xid);
            if (k == 1) {
              MapMat<S> gxm(gx.plane(b, 0), cin, hw);
              gxm.noalias() += wm.transpose() * gym;
            } else {
              MapMat<S> gcm(gcol.data(), rows, hw);
              gcm.noalias() = wm.transpose() * gym;
              col2im_add(gcol.data(), cin, h, w, k, gx.plane(b, 0));
            }
          }
        }
      },
      "conv2d");
}

template <typename S>
Var<S> relu(const Var<S>& x) {
  return unary(
      x, [](S v) { return v > S(0) ? v : S(0); }, [](S v, S) { return v > S(0) ? S(1) : S(0); }, "relu");
}

template <typename S>
Var<S> sigmoid(const Var<S>& x) {
  return unary(
      x, [](S v) { return S(1) / (S(1) + std::exp(-v)); }, [](S, S y) { return y * (S(1) - y); },
      "sigmoid");
}

template <typename S>
Var<S> scaled_sigmoid(const Var<S>& x, S scale) {
  const S top = std::nextafter(scale, S(0));
  return unary(
      x,
      [scale, top](S v) { return std::min(top, scale / (S(1) + std::exp(-v))); },
      [scale](S v, S) {
        const S s = S(1) / (S(1) + std::exp(-v));
        return scale * s * (S(1) - s);
      },
      "scaled_sigmoid");
}

template <typename S>
Var<S> scale(const Var<S>& x, S factor) {
  return unary(x, [factor](S v) { return factor * v; }, [factor](S, S) { return factor; }, "scale");
}

template <typename S>
Var<S> shift(const Var<S>& x, S offset) {
  return unary(x, [offset](S v) { return v + offset; }, [](S, S) { return S(1); }, "shift");
}

template <typename S>
Var<S> cos(const Var<S>& x) {
  return unary(x, [](S v) { return std::cos(v); }, [](S v, S) { return -std::sin(v); }, "cos");
}

template <typename S>
Var<S> sin(const Var<S>& x) {
  return unary(x, [](S v) { return std::sin(v); }, [](S v, S) { return std::cos(v); }, "sin");
}

template <typename S>
Var<S> detach(const Var<S>& x) {
  return x.tape().constant(x.value());
}

namespace {

// Binary elementwise op; `da`/`db` give partial derivatives given (a, b).
template <typename S, typename F, typename DA, typename DB>
Var<S> binary(const Var<S>& a, const Var<S>& b, F f, DA da, DB db, const char* op) {
  require_same(a, b, op);
  Tape<S>& tape = a.tape();
  const Tensor<S>& av = a.value();
  const Tensor<S>& bv = b.value();
  Tensor<S> out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
  const int aid = a.id(), bid = b.id(), self = static_cast<int>(tape.node_count());
  return tape.push(
      std::move(out), a.requires_grad() || b.requires_grad(),
      [=](Tape<S>& t) {
        const Tensor<S>& av = t.node(aid).value;
        const Tensor<S>& bv = t.node(bid).value;
        const Tensor<S>& gy = t.node(self).grad;
        if (t.node(aid).requires_grad) {
          Tensor<S>& ga = t.grad_buffer(aid);
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * da(av[i], bv[i]);
        }
        if (t.node(bid).requires_grad) {
          Tensor<S>& gb = t.grad_buffer(bid);
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * db(av[i], bv[i]);
        }
      },
      op);
}

}  // namespace

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  return binary(
      a, b, [](S x, S y) { return x + y; }, [](S, S) { return S(1); }, [](S, S) { return S(1); }, "add");
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  return binary(
      a, b, [](S x, S y) { return x - y; }, [](S, S) { return S(1); }, [](S, S) { return S(-1); }, "sub");
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  return binary(
      a, b, [](S x, S y) { return x * y; }, [](S, S y) { return y; }, [](S x, S) { return x; }, "mul");
}

template <typename S>
Var<S> concat(std::span<const Var<S>> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Tape<S>& tape = parts.front().tape();
  const auto& first = parts.front().value();
  int channels = 0;
  bool rg = false;
  std::vector<int> ids, offsets;
  for (const Var<S>& p : parts) {
    if (&p.tape() != &tape) throw StateError("concat: operands live on different tapes");
    const auto& v = p.value();
    if (v.batch() != first.batch() || v.height() != first.height() || v.width() != first.width()) {
      throw ShapeError("concat: incompatible shapes " + shape_string(first.shape()) + " and " +
                       shape_string(v.shape()));
    }
    ids.push_back(p.id());
    offsets.push_back(channels);
    channels += v.channels();
    rg = rg || p.requires_grad();
  }
  const int n = first.batch(), h = first.height(), w = first.width();
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  Tensor<S> out(n, channels, h, w);
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const auto& v = parts[j].value();
    for (int b = 0; b < n; ++b) {
      std::memcpy(out.plane(b, offsets[j]), v.plane(b, 0), sizeof(S) * hw * v.channels());
    }
  }
  const int self = static_cast<int>(tape.node_count());
  return tape.push(
      std::move(out), rg,
      [=](Tape<S>& t) {
        const Tensor<S>& gy = t.node(self).grad;
        for (std::size_t j = 0; j < ids.size(); ++j) {
          if (!t.node(ids[j]).requires_grad) continue;
          Tensor<S>& g = t.grad_buffer(ids[j]);
          const int c = g.channels();
          for (int b = 0; b < n; ++b) {
            S* dst = g.plane(b, 0);
            const S* src = gy.plane(b, offsets[j]);
            for (std::size_t i = 0; i < hw * c; ++i) dst[i] += src[i];
          }
        }
      },
      "concat");
}

template <typename S>
Var<S> mean(const Var<S>& x) {
  Tape<S>& tape = x.tape();
  const Tensor<S>& xv = x.value();
  if (xv.empty()) throw ShapeError("mean: empty tensor");
  using Acc = std::common_type_t<S, double>;
  Acc acc = 0;
  for (S v : xv.values()) acc += v;
  Tensor<S> out(1, 1, 1, 1, static_cast<S>(acc / static_cast<Acc>(xv.size())));
  const int xid = x.id(), self = static_cast<int>(tape.node_count());
  return tape.push(
      std::move(out), x.requires_grad(),
      [=](Tape<S>& t) {
        Tensor<S>& gx = t.grad_buffer(xid);
        const S g = t.node(self).grad[0] / static_cast<S>(gx.size());
        for (S& v : gx.values()) v += g;
      },
      "mean");
}

template <typename S>
Var<S> l1_loss(const Var<S>& pred, const Var<S>& target) {
  require_same(pred, target, "l1_loss");
  Tape<S>& tape = pred.tape();
  const Tensor<S>& pv = pred.value();
  const Tensor<S>& tv = target.value();
  if (pv.empty()) throw ShapeError("l1_loss: empty tensor");
  using Acc = std::common_type_t<S, double>;
  Acc acc = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) acc += std::abs(static_cast<Acc>(pv[i]) - static_cast<Acc>(tv[i]));
  Tensor<S> out(1, 1, 1, 1, static_cast<S>(acc / static_cast<Acc>(pv.size())));
  const int pid = pred.id(), tid = target.id(), self = static_cast<int>(tape.node_count());
  return tape.push(
      std::move(out), pred.requires_grad() || target.requires_grad(),
      [=](Tape<S>& t) {
        const Tensor<S>& pv = t.node(pid).value;
        const Tensor<S>& tv = t.node(tid).value;
        const S g = t.node(self).grad[0] / static_cast<S>(pv.size());
        auto sign = [](S d) { return d > S(0) ? S(1) : (d < S(0) ? S(-1) : S(0)); };
        if (t.node(pid).requires_grad) {
          Tensor<S>& gp = t.grad_buffer(pid);
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g * sign(pv[i] - tv[i]);
        }
        if (t.node(tid).requires_grad) {
          Tensor<S>& gt = t.grad_buffer(tid);
          for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= g * sign(pv[i] - tv[i]);
        }
      },
      "l1_loss");
}

template <typename S>
Var<S> malus(const Var<S>& imax, const Var<S>& imin, const Var<S>& angle) {
  // cos^2 A = (1 + cos 2A)/2, sin^2 A = (1 - cos 2A)/2
  const Var<S> c2 = cos(scale(angle, S(2)));
  const Var<S> cos_sq = scale(shift(c2, S(1)), S(0.5));
  const Var<S> sin_sq = scale(shift(scale(c2, S(-1)), S(1)), S(0.5));
  return add(mul(imax, cos_sq), mul(imin, sin_sq));
}

#define POLARFILM_INSTANTIATE_OPS(S)                                            \
  template Var<S> conv2d(const Var<S>&, const Var<S>&, const Var<S>&);          \
  template Var<S> relu(const Var<S>&);                                          \
  template Var<S> sigmoid(const Var<S>&);                                       \
  template Var<S> scaled_sigmoid(const Var<S>&, S);                             \
  template Var<S> add(const Var<S>&, const Var<S>&);                            \
  template Var<S> sub(const Var<S>&, const Var<S>&);                            \
  template Var<S> mul(const Var<S>&, const Var<S>&);                            \
  template Var<S> scale(const Var<S>&, S);                                      \
  template Var<S> shift(const Var<S>&, S);                                      \
  template Var<S> cos(const Var<S>&);                                           \
  template Var<S> sin(const Var<S>&);                                           \
  template Var<S> concat(std::span<const Var<S>>);                              \
  template Var<S> mean(const Var<S>&);                                          \
  template Var<S> l1_loss(const Var<S>&, const Var<S>&);                        \
  template Var<S> detach(const Var<S>&);                                        \
  template Var<S> malus(const Var<S>&, const Var<S>&, const Var<S>&);

POLARFILM_INSTANTIATE_OPS(float)
POLARFILM_INSTANTIATE_OPS(double)
POLARFILM_INSTANTIATE_OPS(long double)

#undef POLARFILM_INSTANTIATE_OPS

}  // namespace ad

template <typename S>
double l1_loss(const Tensor<S>& pred, const Tensor<S>& target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("l1_loss: shape mismatch " + shape_string(pred.shape()) + " vs " +
                     shape_string(target.shape()));
  }
  if (pred.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    acc += std::abs(static_cast<double>(pred[i]) - static_cast<double>(target[i]));
  }
  return acc / static_cast<double>(pred.size());
}

template double l1_loss(const Tensor<float>&, const Tensor<float>&);
template double l1_loss(const Tensor<double>&, const Tensor<double>&);

}  // namespace polarfilm

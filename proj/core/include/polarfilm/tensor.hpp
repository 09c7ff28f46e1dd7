#pragma once

#include <array>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace polarfilm {

/// 64-byte aligned storage. Vectorized kernels peel elements up to an aligned
/// address, so with an arbitrary heap base the summation order (and the
/// rounding) of identical computations could change from run to run.
template <typename T>
struct CacheAlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};
  CacheAlignedAllocator() = default;
  template <typename U>
  CacheAlignedAllocator(const CacheAlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }
  template <typename U>
  bool operator==(const CacheAlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, CacheAlignedAllocator<T>>;

/// Dense NCHW tensor, contiguous row-major.
template <typename S>
class Tensor {
 public:
  using Shape = std::array<int, 4>;
  using value_type = S;

  Tensor() = default;
  explicit Tensor(Shape shape, S fill = S(0));
  Tensor(int n, int c, int h, int w, S fill = S(0)) : Tensor(Shape{n, c, h, w}, fill) {}

  const Shape& shape() const { return shape_; }
  int batch() const { return shape_[0]; }
  int channels() const { return shape_[1]; }
  int height() const { return shape_[2]; }
  int width() const { return shape_[3]; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(shape_[2]) * shape_[3]; }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  std::span<S> values() { return data_; }
  std::span<const S> values() const { return data_; }

  S& operator[](std::size_t i) { return data_[i]; }
  S operator[](std::size_t i) const { return data_[i]; }

  S& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  S at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  /// Start of the H*W plane for (n, c).
  S* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
  const S* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }

  void fill(S v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool operator==(const Tensor&) const = default;

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<T>(data_[i]);
    return out;
  }

 private:
  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }

  Shape shape_{0, 0, 0, 0};
  AlignedVector<S> data_;
};

std::string shape_string(const std::array<int, 4>& shape);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace polarfilm

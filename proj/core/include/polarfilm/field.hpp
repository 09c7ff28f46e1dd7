#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace polarfilm {

/// Dense single-channel image of doubles, row-major.
class Field {
 public:
  Field() = default;
  Field(int height, int width, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(int y, int x) { return values_[index(y, x)]; }
  double operator()(int y, int x) const { return values_[index(y, x)]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const Field& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const Field& other) const = default;

 private:
  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

/// Throws ShapeError naming `what` unless both fields share H x W.
void require_same_shape(const Field& a, const Field& b, std::string_view what);

/// Throws DataError if any value is NaN or infinite.
void require_finite(const Field& f, std::string_view what);

double max_abs_difference(const Field& a, const Field& b);
double mean(const Field& f);

}  // namespace polarfilm

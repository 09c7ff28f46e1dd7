#include "polarfilm/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polarfilm/error.hpp"

namespace polarfilm {

Field::Field(int height, int width, double fill) : height_(height), width_(width) {
  if (height < 0 || width < 0) {
    throw ShapeError("field dimensions must be non-negative");
  }
  values_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

void require_same_shape(const Field& a, const Field& b, std::string_view what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
  }
}

void require_finite(const Field& f, std::string_view what) {
  for (double v : f.values()) {
    if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite value");
  }
}

double max_abs_difference(const Field& a, const Field& b) {
  require_same_shape(a, b, "max_abs_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double mean(const Field& f) {
  if (f.empty()) return 0.0;
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

}  // namespace polarfilm

#include "polarfilm/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "polarfilm/error.hpp"

namespace polarfilm {

double psnr(const Field& a, const Field& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (!(peak > 0.0)) throw ParameterError("psnr peak must be positive");
  if (a.empty()) throw ShapeError("psnr of empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    k[static_cast<std::size_t>(i)] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    total += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= total;
  return k;
}

// Separable valid-mode filtering: output is (H-n+1) x (W-n+1).
Field filter_valid(const Field& f, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = f.height() - n + 1, ow = f.width() - n + 1;
  Field rows(f.height(), ow);
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * f(y, x + i);
      rows(y, x) = s;
    }
  }
  Field out(oh, ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * rows(y + i, x);
      out(y, x) = s;
    }
  }
  return out;
}

Field product(const Field& a, const Field& b) {
  Field out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace

double ssim(const Field& a, const Field& b, const SsimParams& p) {
  require_same_shape(a, b, "ssim");
  if (p.window < 1 || p.window % 2 == 0) throw ParameterError("ssim window must be a positive odd size");
  if (!(p.sigma > 0.0) || !(p.peak > 0.0)) throw ParameterError("ssim sigma and peak must be positive");
  if (a.height() < p.window || a.width() < p.window) {
    throw ShapeError("ssim needs images at least " + std::to_string(p.window) + " pixels on each side");
  }
  const auto k = gaussian_kernel(p.window, p.sigma);
  const double c1 = (p.k1 * p.peak) * (p.k1 * p.peak);
  const double c2 = (p.k2 * p.peak) * (p.k2 * p.peak);
  const Field mu_a = filter_valid(a, k), mu_b = filter_valid(b, k);
  const Field aa = filter_valid(product(a, a), k);
  const Field bb = filter_valid(product(b, b), k);
  const Field ab = filter_valid(product(a, b), k);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = aa[i] - ma * ma, vb = bb[i] - mb * mb, cov = ab[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace polarfilm

#pragma once

#include "polarfilm/field.hpp"

namespace polarfilm {

/// PSNR in dB; identical inputs give +infinity.
double psnr(const Field& a, const Field& b, double peak = 1.0);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean SSIM over every fully-contained Gaussian window.
double ssim(const Field& a, const Field& b, const SsimParams& params = {});

}  // namespace polarfilm

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "polarfilm/error.hpp"
#include "polarfilm/metrics.hpp"
#include "metric_oracles.hpp"
#include "test_support.hpp"

using namespace polarfilm;
using polarfilm::testing::psnr_oracle;
using polarfilm::testing::random_field;
using polarfilm::testing::ssim_oracle;

namespace {

Field add_noise(const Field& f, double sigma, Rng& rng) {
  Field out = f;
  for (double& v : out.values()) v += sigma * rng.normal();
  return out;
}

}  // namespace

TEST(Psnr, IdenticalIsInfinite) {
  Rng rng(1);
  const Field a = random_field(8, 8, rng);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
}

TEST(Psnr, ConstantOffset) {
  Rng rng(2);
  const Field a = random_field(32, 32, rng, 0, 0.9);
  Field b = a;
  for (double& v : b.values()) v += 0.1;
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-6);
}

TEST(Psnr, Errors) {
  EXPECT_THROW(psnr(Field(4, 4), Field(4, 5)), ShapeError);
  EXPECT_THROW(psnr(Field(4, 4), Field(4, 4), 0.0), ParameterError);
}

TEST(Psnr, MatchesScalarOracle) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Field a = random_field(24, 31, rng);
    const Field b = random_field(24, 31, rng);
    EXPECT_NEAR(psnr(a, b), psnr_oracle(a, b), 1e-9);
  }
}

TEST(Psnr, MonotoneInNoise) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Field clean = random_field(32, 32, rng);
    const double p1 = psnr(clean, add_noise(clean, 0.01, rng));
    const double p2 = psnr(clean, add_noise(clean, 0.02, rng));
    const double p5 = psnr(clean, add_noise(clean, 0.05, rng));
    EXPECT_GT(p1, p2);
    EXPECT_GT(p2, p5);
  }
}

TEST(Ssim, IdenticalIsExactlyOne) {
  Rng rng(4);
  for (int t = 0; t < 5; ++t) {
    const Field a = random_field(20, 27, rng);
    EXPECT_EQ(ssim(a, a), 1.0);
  }
  EXPECT_EQ(ssim(Field(16, 16, 0.3), Field(16, 16, 0.3)), 1.0);
}

TEST(Ssim, InvertedStructureScoresLow) {
  Rng rng(5);
  const Field a = random_field(32, 32, rng);
  Field inv = a;
  for (double& v : inv.values()) v = 1.0 - v;
  EXPECT_LT(ssim(a, inv), 0.3);
}

TEST(Ssim, Symmetric) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const Field a = random_field(18, 18, rng);
    const Field b = random_field(18, 18, rng);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  }
}

TEST(Ssim, MatchesScalarOracle) {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const Field a = random_field(19, 23, rng);
    Field b = add_noise(a, 0.05 + 0.01 * t, rng);
    EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
  }
}

TEST(Ssim, WindowLargerThanImage) {
  EXPECT_THROW(ssim(Field(10, 40), Field(10, 40)), ShapeError);
  EXPECT_THROW(ssim(Field(12, 12), Field(12, 13)), ShapeError);
  EXPECT_NO_THROW(ssim(Field(11, 11), Field(11, 11)));
}

TEST(Ssim, InvariantToJointTranslation) {
  Rng rng(8);
  const Field a = random_field(16, 16, rng);
  const Field b = add_noise(a, 0.05, rng);
  const auto place = [](const Field& f, int oy, int ox) {
    Field canvas(48, 48, 0.5);
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) canvas(oy + y, ox + x) = f(y, x);
    return canvas;
  };
  const double s0 = ssim(place(a, 12, 12), place(b, 12, 12));
  EXPECT_LT(s0, 1.0);
  EXPECT_NEAR(ssim(place(a, 20, 17), place(b, 20, 17)), s0, 1e-12);
  EXPECT_NEAR(ssim(place(a, 11, 21), place(b, 11, 21)), s0, 1e-12);
}

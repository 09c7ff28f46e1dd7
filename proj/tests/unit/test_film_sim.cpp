#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "polarfilm/error.hpp"
#include "polarfilm/film_sim.hpp"
#include "polarfilm/plm.hpp"
#include "test_support.hpp"

using namespace polarfilm;

namespace {

SceneConfig config_with(ContentKind kind, std::uint64_t seed) {
  SceneConfig c;
  c.content = kind;
  c.seed = seed;
  return c;
}

FilmScene single_pixel_scene(double im, double id, double hl, double dolp, double phi) {
  FilmScene s;
  s.im = Field(1, 1, im);
  s.id_field = Field(1, 1, id);
  s.texture = Field(1, 1, 0.0);
  s.hl_s0 = Field(1, 1, hl);
  s.hl_dolp = Field(1, 1, dolp);
  s.hl_phi = Field(1, 1, phi);
  return s;
}

constexpr ContentKind kKinds[] = {ContentKind::QrLike, ContentKind::TextLike, ContentKind::ProductTexture};

}  // namespace

TEST(SceneConfig, Validation) {
  SceneConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = [](auto mutate) {
    SceneConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](SceneConfig& c) { c.width = 15; }).validate(), ParameterError);
  EXPECT_THROW(bad([](SceneConfig& c) { c.height = 14; }).validate(), ParameterError);
  EXPECT_THROW(bad([](SceneConfig& c) { c.wrinkle_density = -0.1; }).validate(), ParameterError);
  EXPECT_THROW(bad([](SceneConfig& c) { c.highlight_strength = 1.5; }).validate(), ParameterError);
  EXPECT_THROW(bad([](SceneConfig& c) { c.transmittance_min = 0.99; }).validate(), ParameterError);
  EXPECT_THROW(bad([](SceneConfig& c) { c.highlight_dolp_max = 1.2; }).validate(), ParameterError);
  EXPECT_THROW(bad([](SceneConfig& c) { c.noise_sigma = std::nan(""); }).validate(), ParameterError);
  try {
    bad([](SceneConfig& c) { c.texture_amplitude = 0.5; }).validate();
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("texture_amplitude"), std::string::npos);
  }
}

TEST(ContentKind, Names) {
  for (auto k : kKinds) EXPECT_EQ(content_kind_from_string(to_string(k)), k);
  EXPECT_EQ(content_kind_from_string("qr"), ContentKind::QrLike);
  EXPECT_THROW(content_kind_from_string("poster"), ParameterError);
}

TEST(GenerateScene, DeterministicPerSeed) {
  for (auto k : kKinds) {
    const FilmScene a = generate_scene(config_with(k, 77));
    const FilmScene b = generate_scene(config_with(k, 77));
    EXPECT_EQ(a.im, b.im);
    EXPECT_EQ(a.id_field, b.id_field);
    EXPECT_EQ(a.hl_s0, b.hl_s0);
    EXPECT_EQ(a.hl_dolp, b.hl_dolp);
    EXPECT_EQ(a.hl_phi, b.hl_phi);
    const FilmScene c = generate_scene(config_with(k, 78));
    EXPECT_NE(a.im, c.im);
  }
}

TEST(GenerateScene, ZeroHighlightStrength) {
  SceneConfig c = config_with(ContentKind::TextLike, 5);
  c.highlight_strength = 0.0;
  const FilmScene s = generate_scene(c);
  for (double v : s.hl_s0.values()) ASSERT_EQ(v, 0.0);
}

TEST(GenerateScene, NoWrinklesNoHighlightNoTexture) {
  for (auto k : kKinds) {
    SceneConfig c = config_with(k, 12);
    c.wrinkle_density = 0.0;
    const FilmScene s = generate_scene(c);
    EXPECT_EQ(s.ridge_count, 0);
    for (double v : s.hl_s0.values()) ASSERT_EQ(v, 0.0);
    for (double v : s.texture.values()) ASSERT_EQ(v, 0.0);
  }
}

TEST(GenerateScene, FieldInvariants) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const FilmScene s = generate_scene(config_with(kKinds[seed % 3], seed));
    EXPECT_GT(s.ridge_count, 0);
    double hl_on_ridges = 0, dolp_on_ridges = 0;
    for (std::size_t i = 0; i < s.im.size(); ++i) {
      ASSERT_GE(s.im[i], 0.0);
      ASSERT_LE(s.im[i], 1.0);
      ASSERT_LE(std::abs(s.id_field[i]), 0.5);
      ASSERT_GE(s.im[i] + s.id_field[i], -1e-12);
      ASSERT_LE(s.im[i] + s.id_field[i], 1.0 + 1e-12);
      ASSERT_GE(s.hl_s0[i], 0.0);
      ASSERT_GE(s.hl_dolp[i], 0.0);
      ASSERT_LE(s.hl_dolp[i], 1.0);
      ASSERT_GE(s.hl_phi[i], 0.0);
      ASSERT_LT(s.hl_phi[i], std::numbers::pi);
      if (s.hl_s0[i] > 0.05) {
        hl_on_ridges += 1;
        dolp_on_ridges += s.hl_dolp[i] >= 0.6 - 1e-12;
      }
    }
    EXPECT_GT(hl_on_ridges, 0);
    EXPECT_EQ(dolp_on_ridges, hl_on_ridges);
  }
}

TEST(Render, DiffuseOnlyScene) {
  SceneConfig c = config_with(ContentKind::QrLike, 3);
  c.wrinkle_density = 0.0;
  c.highlight_strength = 0.0;
  c.transmittance_min = c.transmittance_max = 1.0;
  c.texture_amplitude = 0.0;
  const FilmScene s = generate_scene(c);
  for (double v : s.id_field.values()) ASSERT_EQ(v, 0.0);
  const RenderedCapture r = render_captures(s, 0.0);
  for (int k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < s.im.size(); ++i) ASSERT_EQ(r.stack.channel(k)[i], s.im[i] / 2);
  }
  const StokesMap st = stokes_from_stack(r.stack);
  EXPECT_LE(max_abs_difference(st.s0, s.im), 1e-15);
  for (std::size_t i = 0; i < st.s0.size(); ++i) {
    ASSERT_EQ(st.s1[i], 0.0);
    ASSERT_EQ(st.s2[i], 0.0);
  }
  EXPECT_EQ(r.gt, s.im);
}

TEST(Render, FullyPolarizedPixel) {
  const RenderedCapture r = render_captures(single_pixel_scene(0, 0, 1, 1, 0), 0.0);
  EXPECT_NEAR(r.stack.i0[0], capture_at_angle(1, 1, 0, 0), 1e-15);
  EXPECT_NEAR(r.stack.i0[0], 1.0, 1e-15);
  EXPECT_NEAR(r.stack.i90[0], 0.0, 1e-15);
  EXPECT_NEAR(r.stack.i45[0], 0.5, 1e-15);
  EXPECT_NEAR(r.stack.i135[0], 0.5, 1e-15);
}

TEST(Render, NoiseFreeStokesRoundTrip) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const FilmScene s = generate_scene(config_with(kKinds[seed % 3], seed));
    const StokesMap composed = compose_stokes(s);
    const StokesMap st = stokes_from_stack(render_captures(s, 0.0).stack);
    EXPECT_LE(max_abs_difference(st.s0, composed.s0), 1e-12);
    EXPECT_LE(max_abs_difference(st.s1, composed.s1), 1e-12);
    EXPECT_LE(max_abs_difference(st.s2, composed.s2), 1e-12);
  }
}

TEST(Render, NoiseIsSeededAndBounded) {
  const FilmScene s = generate_scene(config_with(ContentKind::ProductTexture, 9));
  const RenderedCapture a = render_captures(s, 0.05);
  const RenderedCapture b = render_captures(s, 0.05);
  EXPECT_EQ(a.stack, b.stack);
  for (int k = 0; k < 4; ++k) {
    for (double v : a.stack.channel(k).values()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
  EXPECT_THROW(render_captures(s, -1.0), ParameterError);
}

TEST(RenderProperty, PhysicalValidity) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    SceneConfig c = config_with(kKinds[seed % 3], seed);
    c.highlight_strength = 1.0;
    c.wrinkle_density = 2.0;
    const FilmScene s = generate_scene(c);
    const StokesMap st = compose_stokes(s);
    for (std::size_t i = 0; i < st.s0.size(); ++i) {
      ASSERT_LE(dop(st.s0[i], st.s1[i], st.s2[i]), 1.0 + 1e-9);
      ASSERT_LE(std::hypot(st.s1[i], st.s2[i]), st.s0[i] + 1e-12);
    }
    const RenderedCapture r = render_captures(s, 0.0);
    for (int k = 0; k < 4; ++k) {
      for (double v : r.stack.channel(k).values()) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
    }
  }
}

TEST(RenderProperty, DecompositionAudit) {
  for (std::uint64_t seed = 0; seed < 9; ++seed) {
    const FilmScene s = generate_scene(config_with(kKinds[seed % 3], seed));
    const Field mean = mean_intensity(render_captures(s, 0.0).stack);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      // the angular average of a polarized component is half its total
      const double expected = (s.id_field[i] + s.hl_s0[i]) / 2;
      ASSERT_NEAR(mean[i] - s.im[i] / 2, expected, 1e-9);
    }
  }
}

TEST(RenderProperty, AnalyticPriorBeatsEveryCapture) {
  for (std::uint64_t seed = 0; seed < 9; ++seed) {
    const FilmScene s = generate_scene(config_with(kKinds[seed % 3], seed));
    const RenderedCapture r = render_captures(s, 0.0);
    const Field p = analytic_prior(stokes_from_stack(r.stack)).p;
    const Field u = unpolarized_part(s);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gap = std::abs(p[i] - u[i] / 2);
      for (int k = 0; k < 4; ++k) ASSERT_LE(gap, std::abs(r.stack.channel(k)[i] - u[i] / 2) + 1e-12);
    }
  }
}

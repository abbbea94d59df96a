// Licensed under the Apache License 2.0 (see LICENSE file).
#include <doctest.h>

#include <cmath>

#include "solver.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace ksr;
using namespace ksr_test;

namespace {

SceneSpec small_scene() {
  SceneSpec spec;
  spec.hr_rows = 32;
  spec.hr_cols = 48;
  spec.n_bands = 4;
  return spec;
}

double rms(const ImageGrid& img) { return std::sqrt(dot(img, img) / static_cast<double>(img.size())); }

}  // namespace

TEST_CASE("deterministic phantoms") {
  const ImageGrid ramp = make_phantom(PhantomKind::ramp, 3, 4, 0);
  CHECK(ramp(0, 0) == 0.0);
  CHECK(ramp(2, 3) == 11.0);
  CHECK(ramp(1, 0) == 4.0);

  const ImageGrid checker = make_phantom(PhantomKind::checker, 4, 4, 0);
  CHECK(checker(0, 0) == 150.0);
  CHECK(checker(0, 1) == 50.0);
  CHECK(checker(1, 1) == 150.0);

  const ImageGrid bars = make_phantom(PhantomKind::bars, 70, 40, 0);
  for (int c = 0; c < 20; ++c) CHECK(bars(0, c) == (c % 2 == 0 ? 150.0 : 50.0));
  for (int r = 60; r < 70; ++r) CHECK(bars(r, 0) == ((0 % 8) * 2 < 8 ? 150.0 : 50.0));
  CHECK(bars(0, 20) == bars(0, 39));
  CHECK(bars(1, 20) == 50.0);
}

TEST_CASE("random phantoms") {
  for (PhantomKind k : {PhantomKind::texture, PhantomKind::edges}) {
    const ImageGrid a = make_phantom(k, 40, 40, 7);
    CHECK(max_abs_diff(a, make_phantom(k, 40, 40, 7)) == 0.0);
    CHECK(max_abs_diff(a, make_phantom(k, 40, 40, 8)) > 1.0);
    CHECK(min_value(a) >= 5.0);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    CHECK(std::abs(mean(make_phantom(PhantomKind::texture, 64, 64, seed)) - 100.0) < 1.0);
  CHECK(parse_phantom("bars") == PhantomKind::bars);
  CHECK(std::string(to_string(PhantomKind::edges)) == "edges");
  CHECK_THROWS_AS(parse_phantom("zebra"), Error);
}

TEST_CASE("band gains and keystone") {
  const auto g = default_band_gains(10);
  CHECK(g.front() == doctest::Approx(0.7 + 0.6 * std::sin(0.2)));
  CHECK(g.back() == doctest::Approx(0.7 + 0.6 * std::sin(3.0)));

  const KeystoneModel ks = make_linear_keystone(10, 21, 5, 0.6, 0.6);
  CHECK(ks.band(5).is_zero());
  CHECK(ks.dx(0, 0) == doctest::Approx(0.6));
  CHECK(ks.dx(0, 20) == doctest::Approx(-0.6));
  CHECK(ks.dx(0, 10) == doctest::Approx(0.0));
  CHECK(ks.dy(0, 3) == doctest::Approx(-0.6));
  CHECK(ks.dx(9, 20) == doctest::Approx(0.6 * 4.0 / 5.0));
  CHECK(parse_keystone_kind("table") == KeystoneKind::table);
}

TEST_CASE("scene validation") {
  SceneSpec spec = small_scene();
  spec.scale = 3;
  spec.hr_rows = 64;
  spec.hr_cols = 64;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = small_scene();
  spec.band_gains = {1.0, 2.0};
  CHECK_THROWS_AS(generate(spec), Error);
  spec = small_scene();
  spec.reference_band = 4;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = small_scene();
  spec.keystone = KeystoneKind::table;
  CHECK_THROWS_AS(generate(spec), Error);
}

TEST_CASE("generation is reproducible") {
  const SynthResult a = generate(small_scene()), b = generate(small_scene());
  for (int k = 0; k < 4; ++k) CHECK(max_abs_diff(a.cube.band(k), b.cube.band(k)) == 0.0);
  SceneSpec other = small_scene();
  other.seed = 2;
  CHECK(max_abs_diff(generate(other).cube.band(0), a.cube.band(0)) > 0.0);
  CHECK(a.cube.rows() == 16);
  CHECK(a.cube.cols() == 24);
  CHECK(a.keystone.reference_band() == 2);
}

TEST_CASE("observations follow the forward model") {
  const SynthResult sr = generate(small_scene());
  for (int k = 0; k < 4; ++k) {
    CHECK(max_abs_diff(sr.clean.band(k), forward(sr.truth, sr.channels[k])) == 0.0);
    const ImageGrid noise = sr.cube.band(k) - sr.clean.band(k);
    const double snr = 20.0 * std::log10(rms(sr.clean.band(k)) / rms(noise));
    CHECK(std::abs(snr - 40.0) < 0.5);
    CHECK(sr.noise_sigma[k] == doctest::Approx(rms(sr.clean.band(k)) * 0.01));
  }

  SceneSpec noiseless = small_scene();
  noiseless.noise = NoiseSpec{0.0, std::nullopt};
  const SynthResult nr = generate(noiseless);
  std::vector<Channel> channels;
  for (int k = 0; k < 4; ++k) {
    CHECK(max_abs_diff(nr.cube.band(k), nr.clean.band(k)) == 0.0);
    channels.push_back({nr.cube.band(k), nr.channels[k]});
  }
  SolverConfig cfg;
  cfg.lambda = 0.0;
  CHECK(total_cost(nr.truth, channels, cfg, std::nullopt).total == 0.0);

  SceneSpec fixed = small_scene();
  fixed.noise = NoiseSpec{2.0, std::nullopt};
  const SynthResult fr = generate(fixed);
  const ImageGrid n0 = fr.cube.band(0) - fr.clean.band(0);
  CHECK(std::abs(mean(n0)) < 0.5);
  CHECK(rms(n0) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("equal gains without degradation split the scene evenly") {
  SceneSpec spec = small_scene();
  spec.scale = 1;
  spec.keystone = KeystoneKind::zero;
  spec.psf_recipes = {"identity"};
  spec.band_gains = {1.0, 1.0, 1.0, 1.0};
  spec.noise = NoiseSpec{0.0, std::nullopt};
  const SynthResult sr = generate(spec);
  for (int k = 0; k < 4; ++k) CHECK(max_abs_diff(sr.cube.band(k), sr.truth * 0.25) < 1e-9);
}

TEST_CASE("extra low-resolution blur") {
  SceneSpec spec = small_scene();
  spec.noise = NoiseSpec{0.0, std::nullopt};
  const SynthResult sharp = generate(spec);
  spec.lr_blur_sigma = 1.0;
  const SynthResult blurred = generate(spec);
  for (int k = 0; k < 4; ++k)
    CHECK(max_abs_diff(blurred.cube.band(k), hadamard(sharp.coeffs.bands[k],
                                                      convolve(forward(sharp.truth, [&] {
                                                                 ChannelModel ch = sharp.channels[k];
                                                                 ch.coeffs = ImageGrid(16, 24, 1.0);
                                                                 return ch;
                                                               }()),
                                                               make_gaussian_psf(1.0, 3)))) < 1e-12);
}

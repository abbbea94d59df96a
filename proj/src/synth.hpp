// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "operators.hpp"
#include "raster.hpp"

namespace ksr {

enum class PhantomKind { checker, bars, ramp, texture, edges };
enum class KeystoneKind { zero, linear, table };

PhantomKind parse_phantom(const std::string& name);
const char* to_string(PhantomKind kind);
KeystoneKind parse_keystone_kind(const std::string& name);
const char* to_string(KeystoneKind kind);

struct SceneSpec {
  int hr_rows = 128;
  int hr_cols = 128;
  int scale = 2;
  int n_bands = 10;
  PhantomKind phantom = PhantomKind::texture;
  double intensity = 10.0;              // truth = phantom * intensity
  std::vector<double> band_gains;       // empty: 0.7 + 0.6 sin(linspace(0.2, 3.0, n))
  KeystoneKind keystone = KeystoneKind::linear;
  double keystone_dx_amplitude = 0.6;   // extreme band, at the field edge
  double keystone_dy_amplitude = 0.6;   // extreme band, constant across the field
  std::string keystone_table;
  int reference_band = -1;              // -1: n_bands / 2
  std::vector<std::string> psf_recipes{"rect:2"};  // one for all bands, or one per band
  double lr_blur_sigma = 0.0;           // optional extra LR blur for restoration experiments
  NoiseSpec noise{0.0, 40.0};
  std::uint64_t seed = 1;
};

void validate(const SceneSpec& spec);
std::vector<double> default_band_gains(int n_bands);
KeystoneModel make_linear_keystone(int n_bands, int lr_cols, int reference_band, double dx_amplitude, double dy_amplitude);

struct SynthResult {
  ImageGrid truth;
  HyperCube cube;         // noisy observations Y_k
  HyperCube clean;        // noiseless observations
  KeystoneModel keystone;
  SpectralCoeffMap coeffs;
  std::vector<ChannelModel> channels;
  std::vector<double> noise_sigma;
};

ImageGrid make_phantom(PhantomKind kind, int rows, int cols, std::uint64_t seed);
SynthResult generate(const SceneSpec& spec);

}  // namespace ksr

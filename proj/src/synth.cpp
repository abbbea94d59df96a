// Licensed under the Apache License 2.0 (see LICENSE file).
#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rng.hpp"

namespace ksr {

namespace {
constexpr std::uint64_t kPhantomStream = 1;
constexpr std::uint64_t kNoiseStreamBase = 1000;
}  // namespace

PhantomKind parse_phantom(const std::string& name) {
  if (name == "checker") return PhantomKind::checker;
  if (name == "bars") return PhantomKind::bars;
  if (name == "ramp") return PhantomKind::ramp;
  if (name == "texture") return PhantomKind::texture;
  if (name == "edges") return PhantomKind::edges;
  throw Error(ErrorCode::invalid_argument, "unknown phantom '" + name + "'");
}

const char* to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::checker: return "checker";
    case PhantomKind::bars: return "bars";
    case PhantomKind::ramp: return "ramp";
    case PhantomKind::texture: return "texture";
    case PhantomKind::edges: return "edges";
  }
  return "?";
}

KeystoneKind parse_keystone_kind(const std::string& name) {
  if (name == "zero") return KeystoneKind::zero;
  if (name == "linear") return KeystoneKind::linear;
  if (name == "table") return KeystoneKind::table;
  throw Error(ErrorCode::invalid_argument, "unknown keystone model '" + name + "'");
}

const char* to_string(KeystoneKind kind) {
  switch (kind) {
    case KeystoneKind::zero: return "zero";
    case KeystoneKind::linear: return "linear";
    case KeystoneKind::table: return "table";
  }
  return "?";
}

void validate(const SceneSpec& spec) {
  if (spec.hr_rows < 1 || spec.hr_cols < 1) throw Error(ErrorCode::invalid_argument, "HR dimensions must be positive");
  if (spec.scale < 1) throw Error(ErrorCode::invalid_argument, "scale must be >= 1");
  if (spec.hr_rows % spec.scale != 0 || spec.hr_cols % spec.scale != 0)
    throw Error(ErrorCode::invalid_argument, "HR dimensions " + std::to_string(spec.hr_rows) + "x" +
                                                 std::to_string(spec.hr_cols) + " are not divisible by scale " +
                                                 std::to_string(spec.scale));
  if (spec.n_bands < 1) throw Error(ErrorCode::invalid_argument, "n_bands must be >= 1");
  if (!(spec.intensity > 0.0)) throw Error(ErrorCode::invalid_argument, "intensity must be positive");
  if (!spec.band_gains.empty()) {
    if (static_cast<int>(spec.band_gains.size()) != spec.n_bands)
      throw Error(ErrorCode::invalid_argument, "band_gains must list one gain per band");
    for (double g : spec.band_gains)
      if (!(g > 0.0)) throw Error(ErrorCode::invalid_argument, "band gains must be positive");
  }
  if (spec.reference_band >= spec.n_bands) throw Error(ErrorCode::invalid_argument, "reference band out of range");
  if (spec.psf_recipes.size() != 1 && static_cast<int>(spec.psf_recipes.size()) != spec.n_bands)
    throw Error(ErrorCode::invalid_argument, "give one kernel recipe or one per band");
  if (!(spec.noise.sigma >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise sigma must be >= 0");
  if (!(spec.lr_blur_sigma >= 0.0)) throw Error(ErrorCode::invalid_argument, "lr_blur_sigma must be >= 0");
  if (spec.keystone == KeystoneKind::table && spec.keystone_table.empty())
    throw Error(ErrorCode::invalid_argument, "keystone model 'table' needs a table path");
}

std::vector<double> default_band_gains(int n_bands) {
  std::vector<double> g(n_bands);
  for (int k = 0; k < n_bands; ++k) {
    const double t = n_bands == 1 ? 0.2 : 0.2 + 2.8 * k / (n_bands - 1);
    g[k] = 0.7 + 0.6 * std::sin(t);
  }
  return g;
}

KeystoneModel make_linear_keystone(int n_bands, int lr_cols, int reference_band, double dx_amplitude, double dy_amplitude) {
  const int den = std::max(reference_band, n_bands - 1 - reference_band);
  const double center = 0.5 * (lr_cols - 1);
  std::vector<ShiftField> fields;
  for (int k = 0; k < n_bands; ++k) {
    const double t = den > 0 ? static_cast<double>(k - reference_band) / den : 0.0;
    ShiftField f = ShiftField::zeros(lr_cols);
    for (int c = 0; c < lr_cols; ++c) {
      f.dx[c] = center > 0.0 ? dx_amplitude * t * (c - center) / center : 0.0;
      f.dy[c] = dy_amplitude * t;
    }
    fields.push_back(std::move(f));
  }
  return KeystoneModel(reference_band, std::move(fields));
}

ImageGrid make_phantom(PhantomKind kind, int rows, int cols, std::uint64_t seed) {
  ImageGrid img(rows, cols);
  switch (kind) {
    case PhantomKind::ramp:
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) img(r, c) = static_cast<double>(r) * cols + c;
      return img;
    case PhantomKind::checker:
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) img(r, c) = (r + c) % 2 == 0 ? 150.0 : 50.0;
      return img;
    case PhantomKind::bars: {
      // Seven strips with bar periods 2..8; vertical bars on the left half, horizontal on the right.
      for (int r = 0; r < rows; ++r) {
        const int strip = std::min(6, r * 7 / rows);
        const int period = 2 + strip;
        const int strip_start = (strip * rows + 6) / 7;
        for (int c = 0; c < cols; ++c) {
          const int phase = c < cols / 2 ? c : r - strip_start;
          img(r, c) = (phase % period) * 2 < period ? 150.0 : 50.0;
        }
      }
      return img;
    }
    case PhantomKind::texture:
    case PhantomKind::edges: {
      CounterRng rng(seed, kPhantomStream);
      img = ImageGrid(rows, cols, 100.0);
      const double rmax = std::max(2.0, std::min(rows, cols) / 6.0);
      for (int d = 0; d < 60; ++d) {
        const double cy = rng.uniform(0.0, rows), cx = rng.uniform(0.0, cols);
        const double rad = rng.uniform(2.0, rmax), amp = rng.uniform(-40.0, 40.0);
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            if ((r - cy) * (r - cy) + (c - cx) * (c - cx) < rad * rad) img(r, c) += amp;
      }
      if (kind == PhantomKind::texture) {
        constexpr int kWaves = 128;
        constexpr double kAmp = 12.0;
        ImageGrid t(rows, cols, 0.0);
        for (int w = 0; w < kWaves; ++w) {
          const double f = std::sqrt(rng.uniform(0.05 * 0.05, 0.25 * 0.25));
          const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
          const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
          const double kx = 2.0 * std::numbers::pi * f * std::cos(th), ky = 2.0 * std::numbers::pi * f * std::sin(th);
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) t(r, c) += std::cos(kx * c + ky * r + ph);
        }
        const double scale = kAmp / std::sqrt(kWaves / 2.0);
        for (std::size_t i = 0; i < img.size(); ++i) img[i] += scale * t[i];
        const double shift = 100.0 - mean(img);
        for (std::size_t i = 0; i < img.size(); ++i) img[i] += shift;
      }
      for (std::size_t i = 0; i < img.size(); ++i) img[i] = std::max(img[i], 5.0);
      return img;
    }
  }
  throw Error(ErrorCode::invalid_argument, "unknown phantom");
}

SynthResult generate(const SceneSpec& spec) {
  validate(spec);
  const int s = spec.scale, n = spec.n_bands;
  const int lr_rows = spec.hr_rows / s, lr_cols = spec.hr_cols / s;
  const int ref = spec.reference_band >= 0 ? spec.reference_band : n / 2;
  const auto gains = spec.band_gains.empty() ? default_band_gains(n) : spec.band_gains;

  SynthResult out;
  out.truth = make_phantom(spec.phantom, spec.hr_rows, spec.hr_cols, spec.seed) * spec.intensity;

  switch (spec.keystone) {
    case KeystoneKind::zero: out.keystone = KeystoneModel::identity(n, lr_cols, ref); break;
    case KeystoneKind::linear:
      out.keystone = make_linear_keystone(n, lr_cols, ref, spec.keystone_dx_amplitude, spec.keystone_dy_amplitude);
      break;
    case KeystoneKind::table:
      out.keystone = load_keystone_table(spec.keystone_table, n, lr_cols, spec.reference_band);
      break;
  }

  std::vector<ImageGrid> physical;
  for (int k = 0; k < n; ++k) {
    ChannelModel ch;
    ch.band = k;
    ch.psf = parse_psf_recipe(spec.psf_recipes.size() == 1 ? spec.psf_recipes[0] : spec.psf_recipes[k]);
    ch.shifts = out.keystone.band(k);
    ch.scale = s;
    ch.coeffs = ImageGrid(lr_rows, lr_cols, 1.0);
    physical.push_back(forward(out.truth, ch) * gains[k]);
    out.channels.push_back(std::move(ch));
  }
  out.coeffs = spectral_coefficients_per_band(HyperCube(physical), out.keystone);

  std::optional<Psf> lr_blur;
  if (spec.lr_blur_sigma > 0.0)
    lr_blur = make_gaussian_psf(spec.lr_blur_sigma, static_cast<int>(std::ceil(3.0 * spec.lr_blur_sigma)));

  std::vector<ImageGrid> clean, noisy;
  for (int k = 0; k < n; ++k) {
    out.channels[k].coeffs = out.coeffs.bands[k];
    ImageGrid y = forward(out.truth, out.channels[k]);
    if (lr_blur) {
      ChannelModel unscaled = out.channels[k];
      unscaled.coeffs = ImageGrid(lr_rows, lr_cols, 1.0);
      y = hadamard(out.coeffs.bands[k], convolve(forward(out.truth, unscaled), *lr_blur));
    }
    double sigma = spec.noise.sigma;
    if (spec.noise.snr_db) sigma = std::sqrt(dot(y, y) / static_cast<double>(y.size())) * std::pow(10.0, -*spec.noise.snr_db / 20.0);
    out.noise_sigma.push_back(sigma);
    ImageGrid noisy_y = y;
    if (sigma > 0.0) {
      CounterRng rng(spec.seed, kNoiseStreamBase + static_cast<std::uint64_t>(k));
      for (std::size_t i = 0; i < noisy_y.size(); ++i) noisy_y[i] += sigma * rng.normal();
    }
    clean.push_back(std::move(y));
    noisy.push_back(std::move(noisy_y));
  }
  out.clean = HyperCube(std::move(clean));
  out.cube = HyperCube(std::move(noisy));
  return out;
}

}  // namespace ksr

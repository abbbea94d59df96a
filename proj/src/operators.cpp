// Licensed under the Apache License 2.0 (see LICENSE file).
#include "operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ksr {

Psf::Psf(ImageGrid weights, int anchor_r, int anchor_c) : w_(std::move(weights)), ar_(anchor_r), ac_(anchor_c) {
  if (w_.empty()) throw Error(ErrorCode::invalid_argument, "empty kernel");
  if (ar_ < 0 || ar_ >= w_.rows() || ac_ < 0 || ac_ >= w_.cols())
    throw Error(ErrorCode::invalid_argument, "kernel anchor outside the kernel");
  require_finite(w_, "kernel");
}

Psf::Psf(ImageGrid weights) : Psf(weights, weights.rows() / 2, weights.cols() / 2) {}

bool Psf::is_normalized(double tol) const { return std::abs(weight_sum() - 1.0) <= tol; }

bool Psf::is_nonnegative() const {
  return std::all_of(w_.pixels().begin(), w_.pixels().end(), [](double v) { return v >= 0.0; });
}

Psf make_rect_psf(int support) {
  if (support < 1) throw Error(ErrorCode::invalid_argument, "rect support must be >= 1");
  return Psf(ImageGrid(support, support, 1.0 / (static_cast<double>(support) * support)));
}

Psf make_gaussian_psf(double sigma, int radius) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::invalid_argument, "gaussian sigma must be positive");
  if (radius < 0) throw Error(ErrorCode::invalid_argument, "gaussian radius must be >= 0");
  const int n = 2 * radius + 1;
  ImageGrid w(n, n);
  double total = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double y = r - radius, x = c - radius;
      w(r, c) = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      total += w(r, c);
    }
  }
  w *= 1.0 / total;
  return Psf(std::move(w), radius, radius);
}

Psf compose_psfs(const std::vector<Psf>& psfs) {
  if (psfs.empty()) throw Error(ErrorCode::invalid_argument, "cannot compose an empty kernel list");
  ImageGrid acc = psfs.front().weights();
  int ar = psfs.front().anchor_r(), ac = psfs.front().anchor_c();
  for (std::size_t i = 1; i < psfs.size(); ++i) {
    const ImageGrid& b = psfs[i].weights();
    ImageGrid out(acc.rows() + b.rows() - 1, acc.cols() + b.cols() - 1, 0.0);
    for (int u = 0; u < acc.rows(); ++u)
      for (int v = 0; v < acc.cols(); ++v)
        for (int p = 0; p < b.rows(); ++p)
          for (int q = 0; q < b.cols(); ++q) out(u + p, v + q) += acc(u, v) * b(p, q);
    acc = std::move(out);
    ar += psfs[i].anchor_r();
    ac += psfs[i].anchor_c();
  }
  const double s = sum(acc);
  if (!(std::abs(s) > 0.0)) throw Error(ErrorCode::numerical, "composed kernel sums to zero");
  acc *= 1.0 / s;
  return Psf(std::move(acc), ar, ac);
}

Psf recentered(const Psf& psf) { return Psf(psf.weights()); }

Psf parse_psf_recipe(const std::string& recipe) {
  std::vector<Psf> parts;
  std::stringstream ss(recipe);
  std::string token;
  while (std::getline(ss, token, '*')) {
    token.erase(std::remove_if(token.begin(), token.end(), [](unsigned char c) { return std::isspace(c); }), token.end());
    if (token.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ts(token);
    std::string item;
    while (std::getline(ts, item, ':')) f.push_back(item);
    try {
      if (f[0] == "identity" && f.size() == 1) {
        parts.push_back(make_rect_psf(1));
      } else if (f[0] == "rect" && f.size() == 2) {
        parts.push_back(make_rect_psf(std::stoi(f[1])));
      } else if (f[0] == "gaussian" && (f.size() == 2 || f.size() == 3)) {
        const double sigma = parse_double(f[1]);
        const int radius = f.size() == 3 ? std::stoi(f[2]) : static_cast<int>(std::ceil(3.0 * sigma));
        parts.push_back(make_gaussian_psf(sigma, radius));
      } else {
        throw Error(ErrorCode::config, "unknown kernel recipe '" + token + "'");
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::config, "malformed kernel recipe '" + token + "'");
    } catch (const Error& e) {
      throw Error(ErrorCode::config, "kernel recipe '" + token + "': " + e.what());
    }
  }
  if (parts.empty()) throw Error(ErrorCode::config, "empty kernel recipe");
  return compose_psfs(parts);
}

static void check_kernel_fits(const ImageGrid& img, const Psf& psf) {
  if (psf.height() > img.rows() || psf.width() > img.cols())
    throw Error(ErrorCode::dimension_mismatch, "kernel larger than image");
}

ImageGrid convolve(const ImageGrid& img, const Psf& psf) {
  check_kernel_fits(img, psf);
  ImageGrid out(img.rows(), img.cols(), 0.0);
  const int h = psf.height(), w = psf.width(), ar = psf.anchor_r(), ac = psf.anchor_c();
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) {
      double acc = 0.0;
      for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v) acc += psf(u, v) * img.at_clamped(r + ar - u, c + ac - v);
      out(r, c) = acc;
    }
  }
  return out;
}

ImageGrid convolve_adjoint(const ImageGrid& img, const Psf& psf) {
  check_kernel_fits(img, psf);
  ImageGrid out(img.rows(), img.cols(), 0.0);
  const int h = psf.height(), w = psf.width(), ar = psf.anchor_r(), ac = psf.anchor_c();
  const int R = img.rows(), C = img.cols();
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const double y = img(r, c);
      for (int u = 0; u < h; ++u) {
        const int rr = std::clamp(r + ar - u, 0, R - 1);
        for (int v = 0; v < w; ++v) out(rr, std::clamp(c + ac - v, 0, C - 1)) += psf(u, v) * y;
      }
    }
  }
  return out;
}

namespace {

struct BilinearTap {
  int r0, r1, c0, c1;
  double fr, fc;
};

BilinearTap bilinear_tap(int rows, int cols, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(rows - 1));
  x = std::clamp(x, 0.0, static_cast<double>(cols - 1));
  BilinearTap t;
  t.r0 = static_cast<int>(std::floor(y));
  t.c0 = static_cast<int>(std::floor(x));
  t.r1 = std::min(t.r0 + 1, rows - 1);
  t.c1 = std::min(t.c0 + 1, cols - 1);
  t.fr = y - t.r0;
  t.fc = x - t.c0;
  return t;
}

void check_shifts(const ImageGrid& img, const ShiftField& shifts) {
  if (shifts.cols() != img.cols() || static_cast<int>(shifts.dy.size()) != img.cols())
    throw Error(ErrorCode::dimension_mismatch, "shift table has " + std::to_string(shifts.cols()) +
                                                   " columns, image has " + std::to_string(img.cols()));
  for (int c = 0; c < shifts.cols(); ++c)
    if (!std::isfinite(shifts.dx[c]) || !std::isfinite(shifts.dy[c]))
      throw Error(ErrorCode::non_finite, "shift is not finite");
}

}  // namespace

ImageGrid warp_shift(const ImageGrid& img, const ShiftField& shifts) {
  check_shifts(img, shifts);
  const int R = img.rows(), C = img.cols();
  ImageGrid out(R, C);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const auto t = bilinear_tap(R, C, r + shifts.dy[c], c + shifts.dx[c]);
      out(r, c) = (1 - t.fr) * (1 - t.fc) * img(t.r0, t.c0) + (1 - t.fr) * t.fc * img(t.r0, t.c1) +
                  t.fr * (1 - t.fc) * img(t.r1, t.c0) + t.fr * t.fc * img(t.r1, t.c1);
    }
  }
  return out;
}

ImageGrid warp_shift_adjoint(const ImageGrid& img, const ShiftField& shifts) {
  check_shifts(img, shifts);
  const int R = img.rows(), C = img.cols();
  ImageGrid out(R, C, 0.0);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const auto t = bilinear_tap(R, C, r + shifts.dy[c], c + shifts.dx[c]);
      const double y = img(r, c);
      out(t.r0, t.c0) += (1 - t.fr) * (1 - t.fc) * y;
      out(t.r0, t.c1) += (1 - t.fr) * t.fc * y;
      out(t.r1, t.c0) += t.fr * (1 - t.fc) * y;
      out(t.r1, t.c1) += t.fr * t.fc * y;
    }
  }
  return out;
}

ImageGrid decimate(const ImageGrid& img, int s) {
  if (s < 1) throw Error(ErrorCode::invalid_argument, "decimation factor must be >= 1");
  if (img.rows() % s != 0 || img.cols() % s != 0)
    throw Error(ErrorCode::dimension_mismatch, "image dimensions not divisible by the decimation factor");
  ImageGrid out(img.rows() / s, img.cols() / s);
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out(r, c) = img(r * s, c * s);
  return out;
}

ImageGrid decimate_adjoint(const ImageGrid& img, int s) {
  if (s < 1) throw Error(ErrorCode::invalid_argument, "decimation factor must be >= 1");
  ImageGrid out(img.rows() * s, img.cols() * s, 0.0);
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) out(r * s, c * s) = img(r, c);
  return out;
}

SpectralCoeffMap compute_spectral_coefficients(const HyperCube& registered) {
  const int n = registered.n_bands();
  ImageGrid den(registered.rows(), registered.cols(), 0.0);
  for (int k = 0; k < n; ++k) {
    const ImageGrid& b = registered.band(k);
    require_finite(b, "spectral coefficients");
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i] < 0.0)
        throw Error(ErrorCode::numerical, "negative radiance in band " + std::to_string(k) + "; floor the data first");
      den[i] += b[i];
    }
  }
  for (std::size_t i = 0; i < den.size(); ++i) {
    if (den[i] < 1e-12) {
      std::ostringstream os;
      os << "spectral coefficient denominator vanishes at pixel (" << i / registered.cols() << ", "
         << i % registered.cols() << ")";
      throw Error(ErrorCode::numerical, os.str());
    }
  }
  SpectralCoeffMap out;
  for (int k = 0; k < n; ++k) {
    ImageGrid s = registered.band(k);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] /= den[i];
    out.bands.push_back(std::move(s));
  }
  return out;
}

HyperCube register_cube(const HyperCube& cube, const KeystoneModel& keystone, int target_band) {
  if (keystone.n_bands() != cube.n_bands() || keystone.n_cols() != cube.cols())
    throw Error(ErrorCode::dimension_mismatch, "keystone model does not match the cube geometry");
  const ShiftField& target = keystone.band(target_band);
  std::vector<ImageGrid> bands;
  for (int j = 0; j < cube.n_bands(); ++j) {
    if (j == target_band) {
      bands.push_back(cube.band(j));
      continue;
    }
    ShiftField d = ShiftField::zeros(cube.cols());
    for (int c = 0; c < cube.cols(); ++c) {
      d.dx[c] = target.dx[c] - keystone.dx(j, c);
      d.dy[c] = target.dy[c] - keystone.dy(j, c);
    }
    bands.push_back(warp_shift(cube.band(j), d));
  }
  return HyperCube(std::move(bands), cube.meta());
}

SpectralCoeffMap spectral_coefficients_per_band(const HyperCube& cube, const KeystoneModel& keystone) {
  SpectralCoeffMap out;
  for (int k = 0; k < cube.n_bands(); ++k)
    out.bands.push_back(compute_spectral_coefficients(register_cube(cube, keystone, k)).bands[k]);
  return out;
}

ShiftField scale_shifts(const ShiftField& lr, int s) {
  ShiftField hr = ShiftField::zeros(lr.cols() * s);
  for (int c = 0; c < hr.cols(); ++c) {
    hr.dx[c] = s * lr.dx[c / s];
    hr.dy[c] = s * lr.dy[c / s];
  }
  return hr;
}

void validate_channel(const ChannelModel& ch) {
  if (ch.scale < 1) throw Error(ErrorCode::invalid_argument, "channel scale must be >= 1");
  if (ch.coeffs.empty()) throw Error(ErrorCode::invalid_argument, "channel coefficients missing");
  if (ch.shifts.cols() != ch.coeffs.cols())
    throw Error(ErrorCode::dimension_mismatch, "channel shifts do not cover every LR column");
}

ImageGrid forward(const ImageGrid& x, const ChannelModel& ch) {
  validate_channel(ch);
  if (x.rows() != ch.scale * ch.lr_rows() || x.cols() != ch.scale * ch.lr_cols())
    throw Error(ErrorCode::dimension_mismatch, "HR image is not scale x the LR channel geometry");
  ImageGrid b = convolve(x, ch.psf);
  ImageGrid m = ch.shifts.is_zero() ? std::move(b) : warp_shift(b, scale_shifts(ch.shifts, ch.scale));
  return hadamard(ch.coeffs, decimate(m, ch.scale));
}

ImageGrid adjoint(const ImageGrid& r, const ChannelModel& ch) {
  validate_channel(ch);
  require_same_shape(r, ch.coeffs, "channel adjoint");
  ImageGrid u = decimate_adjoint(hadamard(ch.coeffs, r), ch.scale);
  ImageGrid v = ch.shifts.is_zero() ? std::move(u) : warp_shift_adjoint(u, scale_shifts(ch.shifts, ch.scale));
  return convolve_adjoint(v, ch.psf);
}

namespace {

double keys_cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

// 1-D resampling along one axis: out has n*s samples.
template <class Interp>
ImageGrid resample_axis(const ImageGrid& img, int s, double phase, bool along_rows, Interp interp) {
  const int R = along_rows ? img.rows() * s : img.rows();
  const int C = along_rows ? img.cols() : img.cols() * s;
  const int n = along_rows ? img.rows() : img.cols();
  ImageGrid out(R, C);
  for (int p = 0; p < (along_rows ? R : C); ++p) {
    const double u = (p - phase) / s;
    for (int q = 0; q < (along_rows ? C : R); ++q) {
      auto get = [&](int i) {
        i = std::clamp(i, 0, n - 1);
        return along_rows ? img(i, q) : img(q, i);
      };
      const double v = interp(u, n, get);
      if (along_rows) out(p, q) = v;
      else out(q, p) = v;
    }
  }
  return out;
}

}  // namespace

ImageGrid upsample_bicubic(const ImageGrid& img, int s, double phase) {
  if (s < 1) throw Error(ErrorCode::invalid_argument, "upsampling factor must be >= 1");
  auto cubic = [](double u, int, auto&& get) {
    const int i0 = static_cast<int>(std::floor(u));
    const double t = u - i0;
    double acc = 0.0;
    for (int m = -1; m <= 2; ++m) acc += keys_cubic(t - m) * get(i0 + m);
    return acc;
  };
  return resample_axis(resample_axis(img, s, phase, true, cubic), s, phase, false, cubic);
}

ImageGrid upsample_bilinear(const ImageGrid& img, int s, double phase) {
  if (s < 1) throw Error(ErrorCode::invalid_argument, "upsampling factor must be >= 1");
  auto linear = [](double u, int n, auto&& get) {
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    const int i0 = static_cast<int>(std::floor(u));
    const double t = u - i0;
    return (1.0 - t) * get(i0) + t * get(i0 + 1);
  };
  return resample_axis(resample_axis(img, s, phase, true, linear), s, phase, false, linear);
}

}  // namespace ksr

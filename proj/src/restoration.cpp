// Licensed under the Apache License 2.0 (see LICENSE file).
#include "restoration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"

namespace ksr {

void validate(const RestorationConfig& cfg) {
  if (cfg.kernel_size < 3 || cfg.kernel_size % 2 == 0)
    throw Error(ErrorCode::invalid_argument, "kernel_size must be odd and >= 3");
  if (cfg.blind_iters < 1 || cfg.center_passes < 0) throw Error(ErrorCode::invalid_argument, "iteration counts must be >= 1");
  if (!(cfg.edge_fraction > 0.0 && cfg.edge_fraction <= 1.0))
    throw Error(ErrorCode::invalid_argument, "edge_fraction must lie in (0, 1]");
  if (!(cfg.kernel_gamma >= 0.0) || !(cfg.kernel_cut >= 0.0 && cfg.kernel_cut < 1.0))
    throw Error(ErrorCode::invalid_argument, "kernel fit parameters invalid");
  if (!(cfg.estimate_reg > 0.0) || !(cfg.deconv_reg >= 0.0))
    throw Error(ErrorCode::invalid_argument, "regularization must be non-negative");
  if (!(cfg.nlm_strength > 0.0)) throw Error(ErrorCode::invalid_argument, "nlm_strength must be positive");
  if (cfg.nlm_patch < 1 || cfg.nlm_patch % 2 == 0) throw Error(ErrorCode::invalid_argument, "nlm_patch must be odd");
  if (cfg.nlm_search < 1) throw Error(ErrorCode::invalid_argument, "nlm_search must be >= 1");
}

namespace {

double variance(const ImageGrid& img) {
  const double m = mean(img);
  double v = 0.0;
  for (double p : img.pixels()) v += (p - m) * (p - m);
  return v / static_cast<double>(img.size());
}

ImageGrid pad_edge(const ImageGrid& img, int pad) {
  ImageGrid out(img.rows() + 2 * pad, img.cols() + 2 * pad);
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out(r, c) = img.at_clamped(r - pad, c - pad);
  return out;
}

ImageGrid crop(const ImageGrid& img, int pad, int rows, int cols) {
  ImageGrid out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = img(r + pad, c + pad);
  return out;
}

// |Dx|^2 + |Dy|^2 of the forward-difference stencils on a periodic grid.
std::vector<double> gradient_energy(int rows, int cols) {
  std::vector<double> d(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      d[static_cast<std::size_t>(i) * cols + j] =
          (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * i / rows)) + (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * j / cols));
  return d;
}

ImageGrid deconvolve_periodic(const ImageGrid& img, const Psf& psf, double reg) {
  const int R = img.rows(), C = img.cols();
  const auto H = kernel_otf(psf.weights(), psf.anchor_r(), psf.anchor_c(), R, C);
  const auto D = gradient_energy(R, C);
  auto Y = fft2(img);
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const double den = std::norm(H[i]) + reg * D[i];
    if (!(den > 1e-300)) throw Error(ErrorCode::numerical, "deconvolution denominator vanishes; increase reg");
    Y[i] = std::conj(H[i]) * Y[i] / den;
  }
  return ifft2_real(Y, R, C);
}

void forward_differences(const ImageGrid& f, ImageGrid& gx, ImageGrid& gy) {
  const int R = f.rows(), C = f.cols();
  gx = ImageGrid(R, C);
  gy = ImageGrid(R, C);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      gx(r, c) = f(r, (c + 1) % C) - f(r, c);
      gy(r, c) = f((r + 1) % R, c) - f(r, c);
    }
  }
}

double quantile(std::vector<double> v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  std::nth_element(v.begin(), v.begin() + lo, v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + lo + 1, v.end());
  return a + (pos - lo) * (b - a);
}

ImageGrid shift_kernel_bilinear(const ImageGrid& h, double cy, double cx) {
  const int K = h.rows();
  auto sample = [&](int r, int c) { return (r < 0 || r >= K || c < 0 || c >= K) ? 0.0 : h(r, c); };
  ImageGrid out(K, K);
  for (int r = 0; r < K; ++r) {
    for (int c = 0; c < K; ++c) {
      const double y = r + cy, x = c + cx;
      const int r0 = static_cast<int>(std::floor(y)), c0 = static_cast<int>(std::floor(x));
      const double fr = y - r0, fc = x - c0;
      out(r, c) = (1 - fr) * (1 - fc) * sample(r0, c0) + (1 - fr) * fc * sample(r0, c0 + 1) +
                  fr * (1 - fc) * sample(r0 + 1, c0) + fr * fc * sample(r0 + 1, c0 + 1);
    }
  }
  return out;
}

std::pair<double, double> centroid(const ImageGrid& h) {
  const int r0 = h.rows() / 2;
  double cy = 0.0, cx = 0.0, total = 0.0;
  for (int r = 0; r < h.rows(); ++r)
    for (int c = 0; c < h.cols(); ++c) {
      cy += (r - r0) * h(r, c);
      cx += (c - r0) * h(r, c);
      total += h(r, c);
    }
  return {cy / total, cx / total};
}

bool normalize_nonnegative(ImageGrid& h) {
  double total = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = std::max(h[i], 0.0);
    total += h[i];
  }
  if (!(total > 0.0)) return false;
  h *= 1.0 / total;
  return true;
}

ImageGrid delta_kernel(int K) {
  ImageGrid h(K, K, 0.0);
  h(K / 2, K / 2) = 1.0;
  return h;
}

}  // namespace

Psf estimate_kernel_blind(const ImageGrid& img, const RestorationConfig& cfg) {
  validate(cfg);
  require_finite(img, "estimate_kernel_blind");
  const int K = cfg.kernel_size, r = K / 2;
  if (img.rows() <= 4 * K || img.cols() <= 4 * K)
    throw Error(ErrorCode::invalid_argument, "image must exceed 4x the kernel size per axis");
  if (variance(img) <= 0.0) {
    if (cfg.strict) throw Error(ErrorCode::degenerate, "zero-variance image; blur cannot be estimated");
    return Psf(delta_kernel(K));
  }

  const ImageGrid g = pad_edge(img, K);
  const int R = g.rows(), C = g.cols();
  ImageGrid Gx, Gy;
  forward_differences(g, Gx, Gy);
  const auto FGx = fft2(Gx), FGy = fft2(Gy);

  ImageGrid h = delta_kernel(K);
  ImageGrid f = g;
  for (int outer = 0; outer < cfg.blind_iters; ++outer) {
    ImageGrid px, py;
    forward_differences(f, px, py);
    std::vector<double> mag(px.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(px[i], py[i]);
    const double thr = quantile(mag, 1.0 - cfg.edge_fraction);
    for (std::size_t i = 0; i < mag.size(); ++i)
      if (mag[i] < thr) px[i] = py[i] = 0.0;
    const auto Px = fft2(px), Py = fft2(py);
    Spectrum2D num(Px.size());
    for (std::size_t i = 0; i < num.size(); ++i) {
      const double den = std::norm(Px[i]) + std::norm(Py[i]) + cfg.kernel_gamma;
      num[i] = (std::conj(Px[i]) * FGx[i] + std::conj(Py[i]) * FGy[i]) / den;
    }
    const ImageGrid full = ifft2_real(num, R, C);
    ImageGrid est(K, K);
    for (int u = 0; u < K; ++u)
      for (int v = 0; v < K; ++v) est(u, v) = full(((u - r) % R + R) % R, ((v - r) % C + C) % C);
    for (std::size_t i = 0; i < est.size(); ++i) est[i] = std::max(est[i], 0.0);
    const double peak = max_value(est);
    for (std::size_t i = 0; i < est.size(); ++i)
      if (est[i] < cfg.kernel_cut * peak) est[i] = 0.0;
    if (!normalize_nonnegative(est)) break;
    for (int pass = 0; pass < cfg.center_passes; ++pass) {
      const auto [cy, cx] = centroid(est);
      est = shift_kernel_bilinear(est, cy, cx);
      if (!normalize_nonnegative(est)) {
        est = delta_kernel(K);
        break;
      }
    }
    h = est;
    f = deconvolve_periodic(g, Psf(h), cfg.estimate_reg);
  }
  return Psf(h);
}

ImageGrid deconvolve(const ImageGrid& img, const Psf& psf, double reg) {
  if (!(reg >= 0.0)) throw Error(ErrorCode::invalid_argument, "deconvolution reg must be >= 0");
  require_finite(img, "deconvolve");
  const int pad = std::max(psf.height(), psf.width());
  const ImageGrid padded = pad_edge(img, pad);
  if (reg == 0.0) {
    const auto H = kernel_otf(psf.weights(), psf.anchor_r(), psf.anchor_c(), padded.rows(), padded.cols());
    for (const auto& h : H)
      if (std::norm(h) < 1e-12) throw Error(ErrorCode::numerical, "kernel has spectral zeros; reg must be positive");
  }
  return crop(deconvolve_periodic(padded, psf, reg), pad, img.rows(), img.cols());
}

double deconvolution_noise_gain(int rows, int cols, const Psf& psf, double reg) {
  const int pad = std::max(psf.height(), psf.width());
  const int R = rows + 2 * pad, C = cols + 2 * pad;
  const auto H = kernel_otf(psf.weights(), psf.anchor_r(), psf.anchor_c(), R, C);
  const auto D = gradient_energy(R, C);
  double acc = 0.0;
  for (std::size_t i = 0; i < H.size(); ++i) {
    const double den = std::norm(H[i]) + reg * D[i];
    if (den > 0.0) acc += std::norm(H[i]) / (den * den);
  }
  return std::sqrt(acc / static_cast<double>(H.size()));
}

double estimate_noise_sigma(const ImageGrid& img) {
  const int R = img.rows() / 2 * 2, C = img.cols() / 2 * 2;
  if (R < 2 || C < 2) throw Error(ErrorCode::invalid_argument, "image too small for a noise estimate");
  std::vector<double> hh;
  hh.reserve(static_cast<std::size_t>(R / 2) * (C / 2));
  for (int r = 0; r < R; r += 2)
    for (int c = 0; c < C; c += 2)
      hh.push_back(std::abs(img(r, c) - img(r + 1, c) - img(r, c + 1) + img(r + 1, c + 1)) / 2.0);
  const auto mid = hh.begin() + static_cast<std::ptrdiff_t>(hh.size() / 2);
  std::nth_element(hh.begin(), mid, hh.end());
  double med = *mid;
  if (hh.size() % 2 == 0) med = 0.5 * (med + *std::max_element(hh.begin(), mid));
  return med / 0.6745;
}

ImageGrid nlm_denoise(const ImageGrid& img, int patch, int search, double sigma, double h) {
  require_finite(img, "nlm_denoise");
  if (patch < 1 || patch % 2 == 0 || search < 1) throw Error(ErrorCode::invalid_argument, "invalid NLM window sizes");
  if (patch > img.rows() || patch > img.cols() || 2 * search + 1 > img.rows() || 2 * search + 1 > img.cols())
    throw Error(ErrorCode::dimension_mismatch, "NLM window larger than image");
  if (!(h > 1e-12)) return img;
  const int R = img.rows(), C = img.cols(), pr = patch / 2;
  const int PR = R + 2 * pr, PC = C + 2 * pr;
  const double inv_h2 = 1.0 / (h * h), floor2 = 2.0 * sigma * sigma;
  const double inv_patch = 1.0 / (static_cast<double>(patch) * patch);
  ImageGrid acc(R, C, 0.0), wsum(R, C, 0.0);
  ImageGrid diff(PR, PC), rowsum(PR, C);
  for (int oy = -search; oy <= search; ++oy) {
    for (int ox = -search; ox <= search; ++ox) {
      for (int r = 0; r < PR; ++r)
        for (int c = 0; c < PC; ++c) {
          const double d = img.at_clamped(r - pr, c - pr) - img.at_clamped(r - pr + oy, c - pr + ox);
          diff(r, c) = d * d;
        }
      for (int r = 0; r < PR; ++r)
        for (int c = 0; c < C; ++c) {
          double s = 0.0;
          for (int t = 0; t < patch; ++t) s += diff(r, c + t);
          rowsum(r, c) = s;
        }
      for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
          double d2 = 0.0;
          for (int t = 0; t < patch; ++t) d2 += rowsum(r + t, c);
          d2 *= inv_patch;
          const double w = std::exp(-std::max(d2 - floor2, 0.0) * inv_h2);
          acc(r, c) += w * img.at_clamped(r + oy, c + ox);
          wsum(r, c) += w;
        }
      }
    }
  }
  ImageGrid out(R, C);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc[i] / wsum[i];
  return out;
}

ImageGrid nlm_denoise(const ImageGrid& img, const RestorationConfig& cfg) {
  validate(cfg);
  const double sigma = cfg.nlm_sigma >= 0.0 ? cfg.nlm_sigma : estimate_noise_sigma(img);
  const double h = cfg.nlm_h > 0.0 ? cfg.nlm_h : cfg.nlm_strength * sigma;
  return nlm_denoise(img, cfg.nlm_patch, cfg.nlm_search, sigma, h);
}

RestoreResult restore_channel(const ImageGrid& img, const RestorationConfig& cfg) {
  validate(cfg);
  require_finite(img, "restore_channel");
  RestoreResult out;
  if (variance(img) <= 0.0) {
    if (cfg.strict) throw Error(ErrorCode::degenerate, "zero-variance image; blur cannot be estimated");
    out.image = img;
    out.kernel = Psf(delta_kernel(cfg.kernel_size));
    out.bypassed = true;
    return out;
  }
  out.kernel = estimate_kernel_blind(img, cfg);
  const ImageGrid sharp = deconvolve(img, out.kernel, cfg.deconv_reg);
  out.noise_sigma = cfg.nlm_sigma >= 0.0 ? cfg.nlm_sigma : estimate_noise_sigma(img);
  const double sigma = out.noise_sigma * deconvolution_noise_gain(img.rows(), img.cols(), out.kernel, cfg.deconv_reg);
  const double h = cfg.nlm_h > 0.0 ? cfg.nlm_h : cfg.nlm_strength * sigma;
  out.image = nlm_denoise(sharp, cfg.nlm_patch, cfg.nlm_search, sigma, h);
  return out;
}

}  // namespace ksr

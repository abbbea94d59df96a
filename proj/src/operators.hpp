// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <string>
#include <vector>

#include "raster.hpp"

namespace ksr {

// Convolution kernel. Output pixel r collects in(r + anchor - u) * w(u), so the
// kernel's centre sits at r + center_offset() on the input grid.
class Psf {
 public:
  Psf() = default;
  Psf(ImageGrid weights, int anchor_r, int anchor_c);
  // Anchor at (h/2, w/2).
  explicit Psf(ImageGrid weights);

  int height() const { return w_.rows(); }
  int width() const { return w_.cols(); }
  int anchor_r() const { return ar_; }
  int anchor_c() const { return ac_; }
  double center_offset_r() const { return ar_ - 0.5 * (height() - 1); }
  double center_offset_c() const { return ac_ - 0.5 * (width() - 1); }
  const ImageGrid& weights() const { return w_; }
  double operator()(int u, int v) const { return w_(u, v); }

  double weight_sum() const { return sum(w_); }
  bool is_normalized(double tol = 1e-9) const;
  bool is_nonnegative() const;

 private:
  ImageGrid w_;
  int ar_ = 0;
  int ac_ = 0;
};

Psf make_rect_psf(int support);
Psf make_gaussian_psf(double sigma, int radius);
Psf compose_psfs(const std::vector<Psf>& psfs);
// Same weights, anchor moved to (h/2, w/2).
Psf recentered(const Psf& psf);
// Parses "rect:2", "gaussian:1.0:3" (sigma, radius), "identity", joined with '*' for composition.
Psf parse_psf_recipe(const std::string& recipe);

ImageGrid convolve(const ImageGrid& img, const Psf& psf);
ImageGrid convolve_adjoint(const ImageGrid& img, const Psf& psf);

// Samples img at (row + dy(col), col + dx(col)) bilinearly with clamped coordinates.
ImageGrid warp_shift(const ImageGrid& img, const ShiftField& shifts);
ImageGrid warp_shift_adjoint(const ImageGrid& img, const ShiftField& shifts);

ImageGrid decimate(const ImageGrid& img, int s);
ImageGrid decimate_adjoint(const ImageGrid& img, int s);

// Per-band spectral coefficients: S_k = I_k / sum_j I_j, all bands on one geometry.
struct SpectralCoeffMap {
  std::vector<ImageGrid> bands;
};
SpectralCoeffMap compute_spectral_coefficients(const HyperCube& registered);

// Resamples every band onto the geometry of `target_band` (shift d_target - d_j per column).
HyperCube register_cube(const HyperCube& cube, const KeystoneModel& keystone, int target_band);
// Coefficient map of each band computed on that band's own geometry.
SpectralCoeffMap spectral_coefficients_per_band(const HyperCube& cube, const KeystoneModel& keystone);

// LR per-column shifts expanded to an HR grid of s*cols columns and scaled by s.
ShiftField scale_shifts(const ShiftField& lr, int s);

struct ChannelModel {
  int band = 0;
  Psf psf;           // on the HR grid
  ShiftField shifts; // per LR column, in LR pixels
  int scale = 1;
  ImageGrid coeffs;  // LR geometry

  int lr_rows() const { return coeffs.rows(); }
  int lr_cols() const { return coeffs.cols(); }
};

void validate_channel(const ChannelModel& ch);
ImageGrid forward(const ImageGrid& x, const ChannelModel& ch);
ImageGrid adjoint(const ImageGrid& r, const ChannelModel& ch);

// Upsampling by s; LR pixel i lands on HR coordinate s*i + phase.
ImageGrid upsample_bicubic(const ImageGrid& img, int s, double phase);
ImageGrid upsample_bilinear(const ImageGrid& img, int s, double phase);

}  // namespace ksr

// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include "operators.hpp"
#include "raster.hpp"

namespace ksr {

struct RestorationConfig {
  int kernel_size = 7;
  int blind_iters = 10;          // outer kernel/image alternations
  double edge_fraction = 0.1;    // strongest gradients kept for the kernel fit
  double kernel_gamma = 1.0;     // ridge term of the gradient-domain kernel fit
  double kernel_cut = 0.05;      // weights below cut * max are zeroed
  double estimate_reg = 1e-3;    // latent-image regularization inside the estimator
  int center_passes = 3;
  double deconv_reg = 1e-2;
  double nlm_strength = 0.4;     // h = strength * noise sigma after deconvolution
  int nlm_patch = 3;             // patch side, odd
  int nlm_search = 10;           // search radius
  double nlm_h = 0.0;            // > 0 overrides the strength rule
  double nlm_sigma = -1.0;       // >= 0 overrides the noise estimate
  bool strict = true;            // zero-variance input: error (strict) or pass-through
};

void validate(const RestorationConfig& cfg);

Psf estimate_kernel_blind(const ImageGrid& img, const RestorationConfig& cfg);
ImageGrid deconvolve(const ImageGrid& img, const Psf& psf, double reg);
// rms gain of the deconvolution filter on white noise, for the padded grid deconvolve uses.
double deconvolution_noise_gain(int rows, int cols, const Psf& psf, double reg);
// Median absolute deviation of the finest diagonal Haar band.
double estimate_noise_sigma(const ImageGrid& img);

ImageGrid nlm_denoise(const ImageGrid& img, const RestorationConfig& cfg);
ImageGrid nlm_denoise(const ImageGrid& img, int patch, int search, double sigma, double h);

struct RestoreResult {
  ImageGrid image;
  Psf kernel;
  double noise_sigma = 0.0;  // estimated on the input
  bool bypassed = false;     // degenerate input passed through
};

RestoreResult restore_channel(const ImageGrid& img, const RestorationConfig& cfg);

}  // namespace ksr

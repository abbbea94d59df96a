// Licensed under the Apache License 2.0 (see LICENSE file).
#include "fusion.hpp"

#include <algorithm>

namespace ksr {

Psf make_sfim_kernel(int s, const Psf& detector) {
  if (s < 1) throw Error(ErrorCode::invalid_argument, "scale must be >= 1");
  return recentered(compose_psfs({make_rect_psf(s), detector}));
}

FusionConfig default_fusion_config(int s, const Psf& detector) {
  FusionConfig cfg;
  cfg.smooth = make_sfim_kernel(s, detector);
  cfg.phase = detector.center_offset_r();
  return cfg;
}

namespace {

ImageGrid modulation(const ImageGrid& pan, const FusionConfig& cfg) {
  require_finite(pan, "sfim pan");
  if (!cfg.smooth.is_normalized(1e-9)) throw Error(ErrorCode::invalid_argument, "SFIM smoothing kernel must sum to 1");
  if (cfg.strict)
    for (double v : pan.pixels())
      if (!(v > 0.0)) throw Error(ErrorCode::numerical, "pan image has non-positive pixels");
  const ImageGrid low = convolve(pan, cfg.smooth);
  ImageGrid ratio(pan.rows(), pan.cols());
  for (std::size_t i = 0; i < ratio.size(); ++i) ratio[i] = pan[i] / std::max(low[i], cfg.floor);
  return ratio;
}

void check_geometry(const ImageGrid& lr, const ImageGrid& pan, int s) {
  if (s < 1) throw Error(ErrorCode::invalid_argument, "scale must be >= 1");
  if (pan.rows() != s * lr.rows() || pan.cols() != s * lr.cols())
    throw Error(ErrorCode::dimension_mismatch, "pan must be scale x the band geometry");
}

}  // namespace

ImageGrid sfim_fuse(const ImageGrid& lr_band, const ImageGrid& pan, int s, const FusionConfig& cfg) {
  check_geometry(lr_band, pan, s);
  return hadamard(upsample_bilinear(lr_band, s, cfg.phase), modulation(pan, cfg));
}

HyperCube fuse_cube(const HyperCube& cube, const ImageGrid& pan, int s, const FusionConfig& cfg,
                    const std::optional<KeystoneModel>& keystone) {
  check_geometry(cube.band(0), pan, s);
  if (keystone && (keystone->n_bands() != cube.n_bands() || keystone->n_cols() != cube.cols()))
    throw Error(ErrorCode::dimension_mismatch, "keystone model does not match the cube geometry");
  const ImageGrid ratio = modulation(pan, cfg);
  std::vector<ImageGrid> bands(cube.n_bands());
  for (int k = 0; k < cube.n_bands(); ++k) {
    ImageGrid up = upsample_bilinear(cube.band(k), s, cfg.phase);
    if (keystone && !keystone->band(k).is_zero()) up = warp_shift(up, scale_shifts(keystone->band(k).negated(), s));
    bands[k] = hadamard(up, ratio);
  }
  return HyperCube(std::move(bands), cube.meta());
}

}  // namespace ksr

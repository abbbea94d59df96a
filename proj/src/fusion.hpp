// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <optional>

#include "operators.hpp"
#include "raster.hpp"

namespace ksr {

struct FusionConfig {
  Psf smooth;            // low-pass applied to the pan before taking the ratio
  double phase = 0.5;    // HR coordinate of LR pixel 0 for the bilinear upsample
  double floor = 1e-6;   // denominator floor
  bool strict = true;    // non-positive pan pixels are an error
};

// Mean filter of width s composed with the detector kernel, recentred.
Psf make_sfim_kernel(int s, const Psf& detector);
FusionConfig default_fusion_config(int s, const Psf& detector);

ImageGrid sfim_fuse(const ImageGrid& lr_band, const ImageGrid& pan, int s, const FusionConfig& cfg);

// With a keystone model, each upsampled band is first resampled onto the
// reference geometry at HR, so all fused bands share the pan's grid.
HyperCube fuse_cube(const HyperCube& cube, const ImageGrid& pan, int s, const FusionConfig& cfg,
                    const std::optional<KeystoneModel>& keystone = std::nullopt);

}  // namespace ksr

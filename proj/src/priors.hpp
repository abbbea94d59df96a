// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <optional>
#include <vector>

#include "raster.hpp"

namespace ksr {

struct BtvConfig {
  int P = 4;
  double alpha = 0.2;
};

void validate(const BtvConfig& cfg);

struct BtvShift {
  int l;  // horizontal offset
  int m;  // vertical offset
  double weight;
};

// l in [-P, P], m in [0, P], l + m >= 0, (l, m) != (0, 0); weight alpha^(|l|+|m|).
std::vector<BtvShift> btv_shift_set(const BtvConfig& cfg);

// out(r, c) = x(r + m, c + l), clamped.
ImageGrid translate(const ImageGrid& x, int l, int m);
ImageGrid translate_adjoint(const ImageGrid& y, int l, int m);

double btv_cost(const ImageGrid& x, const BtvConfig& cfg, const std::optional<ImageGrid>& w = std::nullopt);
ImageGrid btv_subgradient(const ImageGrid& x, const BtvConfig& cfg, const std::optional<ImageGrid>& w = std::nullopt);

inline constexpr double kRmapExponent = 0.8;
inline constexpr double kRmapFloor = 0.5;

struct RmapField {
  ImageGrid r;
  ImageGrid w;
};

RmapField compute_rmap(const ImageGrid& img, int window = 2);

}  // namespace ksr

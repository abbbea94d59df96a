// Licensed under the Apache License 2.0 (see LICENSE file).
#include "priors.hpp"

#include <algorithm>
#include <cmath>

namespace ksr {

void validate(const BtvConfig& cfg) {
  if (cfg.P < 1) throw Error(ErrorCode::invalid_argument, "BTV window radius P must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error(ErrorCode::invalid_argument, "BTV alpha must lie in (0, 1)");
}

std::vector<BtvShift> btv_shift_set(const BtvConfig& cfg) {
  validate(cfg);
  std::vector<BtvShift> out;
  for (int m = 0; m <= cfg.P; ++m)
    for (int l = -cfg.P; l <= cfg.P; ++l)
      if (l + m >= 0 && (l != 0 || m != 0)) out.push_back({l, m, std::pow(cfg.alpha, std::abs(l) + std::abs(m))});
  return out;
}

ImageGrid translate(const ImageGrid& x, int l, int m) {
  ImageGrid out(x.rows(), x.cols());
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c) out(r, c) = x.at_clamped(r + m, c + l);
  return out;
}

ImageGrid translate_adjoint(const ImageGrid& y, int l, int m) {
  ImageGrid out(y.rows(), y.cols(), 0.0);
  const int R = y.rows(), C = y.cols();
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) out(std::clamp(r + m, 0, R - 1), std::clamp(c + l, 0, C - 1)) += y(r, c);
  return out;
}

static void check_weights(const ImageGrid& x, const std::optional<ImageGrid>& w) {
  if (w) require_same_shape(x, *w, "BTV weights");
}

double btv_cost(const ImageGrid& x, const BtvConfig& cfg, const std::optional<ImageGrid>& w) {
  check_weights(x, w);
  double total = 0.0;
  for (const auto& s : btv_shift_set(cfg)) {
    double acc = 0.0;
    for (int r = 0; r < x.rows(); ++r) {
      for (int c = 0; c < x.cols(); ++c) {
        const double d = std::abs(x(r, c) - x.at_clamped(r + s.m, c + s.l));
        acc += w ? (*w)(r, c) * d : d;
      }
    }
    total += s.weight * acc;
  }
  return total;
}

static double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

ImageGrid btv_subgradient(const ImageGrid& x, const BtvConfig& cfg, const std::optional<ImageGrid>& w) {
  check_weights(x, w);
  const int R = x.rows(), C = x.cols();
  ImageGrid g(R, C, 0.0);
  for (const auto& s : btv_shift_set(cfg)) {
    for (int r = 0; r < R; ++r) {
      const int rr = std::clamp(r + s.m, 0, R - 1);
      for (int c = 0; c < C; ++c) {
        const int cc = std::clamp(c + s.l, 0, C - 1);
        double sg = sign(x(r, c) - x(rr, cc));
        if (w) sg *= (*w)(r, c);
        sg *= s.weight;
        g(r, c) += sg;
        g(rr, cc) -= sg;
      }
    }
  }
  return g;
}

RmapField compute_rmap(const ImageGrid& img, int window) {
  if (window < 1) throw Error(ErrorCode::invalid_argument, "Rmap window radius must be >= 1");
  require_finite(img, "compute_rmap");
  const int R = img.rows(), C = img.cols();
  ImageGrid gx(R, C), gy(R, C);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      gx(r, c) = 0.5 * (img.at_clamped(r, c + 1) - img.at_clamped(r, c - 1));
      gy(r, c) = 0.5 * (img.at_clamped(r + 1, c) - img.at_clamped(r - 1, c));
    }
  }
  RmapField out{ImageGrid(R, C), ImageGrid(R, C)};
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      double sx = 0.0, sy = 0.0, sq = 0.0;
      for (int dr = -window; dr <= window; ++dr) {
        for (int dc = -window; dc <= window; ++dc) {
          const double a = gx.at_clamped(r + dr, c + dc), b = gy.at_clamped(r + dr, c + dc);
          sx += a;
          sy += b;
          sq += a * a + b * b;
        }
      }
      const double rv = (sx * sx + sy * sy) / (sq + kRmapFloor);
      out.r(r, c) = rv;
      out.w(r, c) = std::exp(-std::pow(std::abs(rv), kRmapExponent));
    }
  }
  return out;
}

}  // namespace ksr

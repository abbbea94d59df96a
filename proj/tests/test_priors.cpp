// Licensed under the Apache License 2.0 (see LICENSE file).
#include <doctest.h>

#include <cmath>
#include <set>

#include "priors.hpp"
#include "test_util.hpp"

using namespace ksr;
using namespace ksr_test;

namespace {

// Quadruple loop straight from the BTV definition, with clamped translation.
double btv_oracle(const ImageGrid& x, int P, double alpha, const ImageGrid* w) {
  double total = 0.0;
  for (int l = -P; l <= P; ++l)
    for (int m = 0; m <= P; ++m) {
      if (l + m < 0 || (l == 0 && m == 0)) continue;
      for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c) {
          const int rr = clampi(r + m, 0, x.rows() - 1), cc = clampi(c + l, 0, x.cols() - 1);
          total += std::pow(alpha, std::abs(l) + std::abs(m)) * (w ? (*w)(r, c) : 1.0) * std::abs(x(r, c) - x(rr, cc));
        }
    }
  return total;
}

// Rmap evaluated pixel by pixel, recomputing every neighbour gradient from the image.
double rmap_oracle(const ImageGrid& img, int r, int c, int rad) {
  auto px = [&](int y, int x) { return img(clampi(y, 0, img.rows() - 1), clampi(x, 0, img.cols() - 1)); };
  double sx = 0, sy = 0, sq = 0;
  for (int dy = -rad; dy <= rad; ++dy)
    for (int dx = -rad; dx <= rad; ++dx) {
      const int y = clampi(r + dy, 0, img.rows() - 1), x = clampi(c + dx, 0, img.cols() - 1);
      const double gx = (px(y, x + 1) - px(y, x - 1)) / 2.0;
      const double gy = (px(y + 1, x) - px(y - 1, x)) / 2.0;
      sx += gx;
      sy += gy;
      sq += gx * gx + gy * gy;
    }
  return (sx * sx + sy * sy) / (sq + 0.5);
}

}  // namespace

TEST_CASE("shift set for P=1") {
  const auto set = btv_shift_set({1, 0.2});
  std::set<std::pair<int, int>> got;
  for (const auto& s : set) {
    got.insert({s.l, s.m});
    const double expect = (std::abs(s.l) + std::abs(s.m)) == 1 ? 0.2 : 0.04;
    CHECK(std::abs(s.weight - expect) < 1e-15);
  }
  CHECK(got == std::set<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 1}, {-1, 1}});
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(validate(BtvConfig{0, 0.2}), Error);
  CHECK_THROWS_AS(validate(BtvConfig{2, 1.0}), Error);
  CHECK_THROWS_AS(validate(BtvConfig{2, 0.0}), Error);
  CHECK_NOTHROW(validate(BtvConfig{4, 0.2}));
}

TEST_CASE("btv cost") {
  CHECK(btv_cost(ImageGrid(5, 5, 3.0), {4, 0.2}) == 0.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ImageGrid x = random_image(5, 5, seed);
    const ImageGrid w = random_image(5, 5, seed + 50, 0.0, 1.0);
    CHECK(std::abs(btv_cost(x, {2, 0.2}) - btv_oracle(x, 2, 0.2, nullptr)) < 1e-10);
    CHECK(std::abs(btv_cost(x, {2, 0.2}, w) - btv_oracle(x, 2, 0.2, &w)) < 1e-10);
    CHECK(std::abs(btv_cost(random_image(8, 7, seed), {4, 0.3}) - btv_oracle(random_image(8, 7, seed), 4, 0.3, nullptr)) <
          1e-10);
  }
}

TEST_CASE("btv cost invariants") {
  const ImageGrid x = random_image(7, 6, 3);
  const BtvConfig cfg{3, 0.2};
  const double base = btv_cost(x, cfg);
  CHECK(base > 0.0);
  ImageGrid shifted = x;
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += 17.0;
  CHECK(btv_cost(shifted, cfg) == doctest::Approx(base).epsilon(1e-12));
  CHECK(btv_cost(x * -2.5, cfg) == doctest::Approx(2.5 * base).epsilon(1e-12));
}

TEST_CASE("btv subgradient") {
  CHECK(max_abs_diff(btv_subgradient(ImageGrid(6, 6, 2.0), {4, 0.2}), ImageGrid(6, 6, 0.0)) == 0.0);
  const ImageGrid x = random_image(6, 6, 8);
  CHECK(max_abs_diff(btv_subgradient(x, {2, 0.2}, ImageGrid(6, 6, 0.0)), ImageGrid(6, 6, 0.0)) == 0.0);

  for (const auto& w : {std::optional<ImageGrid>{}, std::optional<ImageGrid>{random_image(6, 6, 77, 0.2, 1.0)}}) {
    const BtvConfig cfg{2, 0.2};
    const ImageGrid g = btv_subgradient(x, cfg, w);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
      ImageGrid xp = x, xm = x;
      xp[i] += eps;
      xm[i] -= eps;
      const double fd = (btv_cost(xp, cfg, w) - btv_cost(xm, cfg, w)) / (2 * eps);
      CHECK(std::abs(fd - g[i]) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("translation adjoint") {
  const ImageGrid x = random_image(9, 7, 1), y = random_image(9, 7, 2);
  for (auto [l, m] : {std::pair{1, 0}, {-2, 3}, {4, 4}, {0, 1}})
    CHECK(rel_gap(dot(translate(x, l, m), y), dot(x, translate_adjoint(y, l, m))) < 1e-12);
}

TEST_CASE("rmap") {
  const RmapField flat = compute_rmap(ImageGrid(8, 8, 4.0), 2);
  CHECK(max_abs_diff(flat.r, ImageGrid(8, 8, 0.0)) == 0.0);
  CHECK(max_abs_diff(flat.w, ImageGrid(8, 8, 1.0)) == 0.0);

  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ImageGrid img = random_image(8, 8, seed, 0, 50);
    for (int rad : {1, 2}) {
      const RmapField f = compute_rmap(img, rad);
      for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
          const double ro = rmap_oracle(img, r, c, rad);
          CHECK(std::abs(f.r(r, c) - ro) < 1e-10 * std::max(1.0, ro));
          CHECK(std::abs(f.w(r, c) - std::exp(-std::pow(ro, 0.8))) < 1e-10);
          CHECK(f.w(r, c) > 0.0);
          CHECK(f.w(r, c) <= 1.0);
        }
    }
  }
  CHECK_THROWS_AS(compute_rmap(ImageGrid(4, 4), 0), Error);
}

TEST_CASE("rmap separates edges from flat and oscillating regions") {
  ImageGrid step(16, 16, 0.0);
  for (int r = 0; r < 16; ++r)
    for (int c = 8; c < 16; ++c) step(r, c) = 100.0;
  const RmapField e = compute_rmap(step, 2);
  CHECK(e.r(8, 8) > 100.0 * (e.r(8, 2) + 1e-3));
  CHECK(e.w(8, 8) < 0.05);
  CHECK(e.w(8, 7) < 0.05);
  CHECK(e.w(8, 2) == 1.0);

  ImageGrid checker(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) checker(r, c) = (r + c) % 2 ? 1.0 : -1.0;
  const RmapField k = compute_rmap(checker, 2);
  for (int r = 3; r < 13; ++r)
    for (int c = 3; c < 13; ++c) {
      CHECK(k.r(r, c) < 1e-12);
      CHECK(k.w(r, c) > 0.999);
    }
}

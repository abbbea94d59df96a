// Licensed under the Apache License 2.0 (see LICENSE file).
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "solver.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace ksr;
using namespace ksr_test;

namespace {

std::vector<Channel> random_problem(int hr, int s, int n, std::uint64_t seed) {
  std::vector<Channel> chs;
  for (int k = 0; k < n; ++k) {
    Channel ch;
    ch.model.band = k;
    ch.model.psf = s == 1 ? parse_psf_recipe("gaussian:0.7:1") : make_rect_psf(2);
    ch.model.shifts = k == 0 ? ShiftField::zeros(hr / s) : random_shifts(hr / s, seed + 10 * k, 0.8);
    ch.model.scale = s;
    ch.model.coeffs = random_image(hr / s, hr / s, seed + 10 * k + 1, 0.2, 0.9);
    ch.y = random_image(hr / s, hr / s, seed + 10 * k + 2, 0.0, 5.0);
    chs.push_back(ch);
  }
  return chs;
}

SolverConfig config_for(FidelityNorm f, PriorKind p, int s) {
  SolverConfig cfg;
  cfg.fidelity = f;
  cfg.prior = p;
  cfg.scale = s;
  cfg.btv = {2, 0.3};
  cfg.lambda = 0.7;
  return cfg;
}

// Cost written out with explicit operator matrices and the BTV definition.
double cost_oracle(const ImageGrid& x, const std::vector<Channel>& chs, const SolverConfig& cfg, const ImageGrid& w) {
  double data = 0.0;
  for (const auto& ch : chs) {
    const int R = x.rows(), C = x.cols(), s = ch.model.scale;
    const Matrix m = matmul(diagonal_matrix(ch.model.coeffs),
                            matmul(decimation_matrix(R, C, s),
                                   matmul(warp_matrix(R, C, scale_shifts(ch.model.shifts, s)),
                                          convolution_matrix(R, C, ch.model.psf))));
    const auto f = apply(m, x);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double r = ch.y[i] - f[i];
      data += cfg.fidelity == FidelityNorm::L2 ? r * r : std::abs(r);
    }
  }
  double prior = 0.0;
  const int P = cfg.btv.P;
  for (int l = -P; l <= P; ++l)
    for (int m = 0; m <= P; ++m) {
      if (l + m < 0 || (l == 0 && m == 0)) continue;
      for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c)
          prior += std::pow(cfg.btv.alpha, std::abs(l) + std::abs(m)) * w(r, c) *
                   std::abs(x(r, c) - x(clampi(r + m, 0, x.rows() - 1), clampi(c + l, 0, x.cols() - 1)));
    }
  return data + cfg.lambda * prior;
}

void check_gradient(const std::vector<Channel>& chs, const SolverConfig& cfg, const ImageGrid& x,
                    const std::optional<ImageGrid>& w) {
  const ImageGrid g = descent_direction(x, chs, cfg, w);
  const double eps = 1e-6;
  int checked = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ImageGrid xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    const double fp = total_cost(xp, chs, cfg, w).total, fm = total_cost(xm, chs, cfg, w).total;
    const double fd = (fp - fm) / (2 * eps);
    const double rel = std::abs(fd - g[i]) / std::max(std::abs(fd), 1e-3);
    CHECK(rel < 1e-4);
    ++checked;
  }
  CHECK(checked == static_cast<int>(x.size()));
}

}  // namespace

TEST_CASE("defaults") {
  const SolverConfig c;
  CHECK(c.lambda == 0.015);
  CHECK(c.beta0 == 0.8);
  CHECK(c.btv.alpha == 0.2);
  CHECK(c.btv.P == 4);
  CHECK(c.max_iters == 30);
  CHECK(c.rate_up == 1.05);
  CHECK(c.rate_down == 0.95);
  CHECK(c.conv_tol == 0.01);
  CHECK(c.conv_patience == 3);
  CHECK(c.fidelity == FidelityNorm::L2);
}

TEST_CASE("schedule: cost drop raises beta by 5 percent") {
  StepSchedule s(SolverConfig{});
  const auto d = s.update(10.0, 9.0);
  CHECK(d.accepted);
  CHECK(d.beta_used == 0.8);
  CHECK(std::abs(d.beta_next - 0.84) < 1e-15);
  CHECK(std::abs(s.beta() - 0.84) < 1e-15);
}

TEST_CASE("schedule: cost rise lowers beta by 5 percent and rejects") {
  StepSchedule s(SolverConfig{});
  const auto d = s.update(10.0, 11.0);
  CHECK_FALSE(d.accepted);
  CHECK(std::abs(d.beta_next - 0.76) < 1e-15);
  SolverConfig lit;
  lit.paper_literal = true;
  StepSchedule p(lit);
  const auto e = p.update(10.0, 11.0);
  CHECK(e.accepted);
  CHECK(std::abs(e.beta_next - 0.76) < 1e-15);
}

TEST_CASE("schedule: three consecutive sub-1 percent steps stop") {
  StepSchedule s(SolverConfig{});
  CHECK_FALSE(s.update(100.0, 99.5).converged);
  CHECK_FALSE(s.update(99.5, 99.0).converged);
  CHECK(s.update(99.0, 98.9).converged);

  StepSchedule t(SolverConfig{});
  CHECK_FALSE(t.update(100.0, 99.5).converged);
  CHECK_FALSE(t.update(99.5, 99.2).converged);
  CHECK_FALSE(t.update(99.2, 90.0).converged);  // large drop resets the streak
  CHECK_FALSE(t.update(90.0, 89.9).converged);
  CHECK_FALSE(t.update(89.9, 95.0).converged);  // rejection resets too
  CHECK_FALSE(t.update(89.9, 89.8).converged);
  CHECK_FALSE(t.update(89.8, 89.7).converged);
  CHECK(t.update(89.7, 89.6).converged);
}

TEST_CASE("solver stops before the cap once progress stalls") {
  // Two inconsistent constant observations; the optimum is their mean.
  Channel a;
  a.model.psf = make_rect_psf(1);
  a.model.shifts = ShiftField::zeros(8);
  a.model.scale = 1;
  a.model.coeffs = ImageGrid(8, 8, 1.0);
  a.y = ImageGrid(8, 8, 2.0);
  Channel b = a;
  b.y = ImageGrid(8, 8, 3.0);
  SolverConfig cfg;
  cfg.scale = 1;
  cfg.lambda = 0.0;
  cfg.beta0 = 0.05;
  const auto res = super_resolve({a, b}, cfg);
  CHECK(res.trace.converged);
  CHECK(res.trace.records.size() < 30);
  CHECK(mean(res.x) == doctest::Approx(2.5).epsilon(0.02));
}

TEST_CASE("total cost") {
  SceneSpec spec;
  spec.hr_rows = spec.hr_cols = 32;
  spec.n_bands = 3;
  spec.noise = {0.0, std::nullopt};
  const auto data = generate(spec);
  std::vector<Channel> chs;
  for (int k = 0; k < 3; ++k) chs.push_back({data.clean.band(k), data.channels[k]});
  SolverConfig cfg;
  cfg.lambda = 0.0;
  CHECK(total_cost(data.truth, chs, cfg, std::nullopt).data < 1e-18 * dot(data.truth, data.truth));

  Channel flat;
  flat.y = ImageGrid(4, 4, 5.0);
  flat.model.psf = make_rect_psf(1);
  flat.model.shifts = ShiftField::zeros(4);
  flat.model.scale = 1;
  flat.model.coeffs = ImageGrid(4, 4, 1.0);
  SolverConfig c1;
  c1.scale = 1;
  CHECK(total_cost(ImageGrid(4, 4, 5.0), {flat, flat}, c1, std::nullopt).total == 0.0);

  for (auto f : {FidelityNorm::L2, FidelityNorm::L1}) {
    const auto chs2 = random_problem(8, 2, 3, 40);
    const SolverConfig cfg2 = config_for(f, PriorKind::RBTV, 2);
    const ImageGrid x = random_image(8, 8, 41, 0.0, 5.0), w = random_image(8, 8, 42, 0.1, 1.0);
    const double got = total_cost(x, chs2, cfg2, w).total, want = cost_oracle(x, chs2, cfg2, w);
    CHECK(std::abs(got - want) <= 1e-10 * std::abs(want));
  }
  CHECK_THROWS_AS(total_cost(ImageGrid(6, 6), random_problem(8, 2, 1, 1), config_for(FidelityNorm::L2, PriorKind::BTV, 2),
                             std::nullopt),
                  Error);
}

TEST_CASE("gradient matches finite differences") {
  const ImageGrid x = random_image(8, 8, 5, 0.0, 5.0);
  const ImageGrid w = random_image(8, 8, 6, 0.1, 1.0);
  SUBCASE("L2 + RBTV") { check_gradient(random_problem(8, 1, 2, 7), config_for(FidelityNorm::L2, PriorKind::RBTV, 1), x, w); }
  SUBCASE("L2 + BTV") { check_gradient(random_problem(8, 1, 2, 8), config_for(FidelityNorm::L2, PriorKind::BTV, 1), x, std::nullopt); }
  SUBCASE("L2 + TV") { check_gradient(random_problem(8, 1, 2, 9), config_for(FidelityNorm::L2, PriorKind::TV, 1), x, std::nullopt); }
  SUBCASE("L1 + RBTV") { check_gradient(random_problem(8, 1, 2, 10), config_for(FidelityNorm::L1, PriorKind::RBTV, 1), x, w); }
  SUBCASE("L2 + RBTV, s=2") { check_gradient(random_problem(8, 2, 3, 11), config_for(FidelityNorm::L2, PriorKind::RBTV, 2), x, w); }
}

TEST_CASE("gradient special cases") {
  SceneSpec spec;
  spec.hr_rows = spec.hr_cols = 16;
  spec.n_bands = 3;
  spec.noise = {0.0, std::nullopt};
  const auto data = generate(spec);
  std::vector<Channel> chs;
  for (int k = 0; k < 3; ++k) chs.push_back({data.clean.band(k), data.channels[k]});
  SolverConfig cfg;
  cfg.lambda = 0.0;
  const ImageGrid g = descent_direction(data.truth, chs, cfg, std::nullopt);
  CHECK(max_abs_diff(g, ImageGrid(16, 16, 0.0)) < 1e-9 * max_value(data.truth));

  const auto rp = random_problem(8, 2, 2, 60);
  const ImageGrid x = random_image(8, 8, 61);
  SolverConfig l0 = config_for(FidelityNorm::L2, PriorKind::BTV, 2);
  l0.lambda = 0.0;
  ImageGrid pure(8, 8, 0.0);
  for (const auto& ch : rp) pure += adjoint(ch.y - forward(x, ch.model), ch.model) * -2.0;
  CHECK(max_abs_diff(descent_direction(x, rp, l0, std::nullopt), pure) < 1e-12);
}

TEST_CASE("fixed point: truth initialisation with lambda 0") {
  const ImageGrid truth = random_image(8, 8, 70, 1.0, 3.0);
  Channel ch;
  ch.y = truth;
  ch.model.psf = make_rect_psf(1);
  ch.model.shifts = ShiftField::zeros(8);
  ch.model.scale = 1;
  ch.model.coeffs = ImageGrid(8, 8, 1.0);
  SolverConfig cfg;
  cfg.scale = 1;
  cfg.lambda = 0.0;
  const auto res = super_resolve({ch, ch}, cfg);
  CHECK(max_abs_diff(res.x, truth) == 0.0);
  CHECK(res.trace.initial.total == 0.0);
}

TEST_CASE("solver trace invariants") {
  SceneSpec spec;
  spec.hr_rows = spec.hr_cols = 32;
  spec.n_bands = 4;
  const auto data = generate(spec);
  std::vector<Channel> chs;
  for (int k = 0; k < 4; ++k) chs.push_back({data.cube.band(k), data.channels[k]});
  SolverConfig cfg;
  const auto res = super_resolve(chs, cfg);
  CHECK(res.x.rows() == 2 * chs[0].y.rows());
  CHECK(res.x.cols() == 2 * chs[0].y.cols());
  CHECK(static_cast<int>(res.trace.records.size()) <= cfg.max_iters);
  double last = res.trace.initial.total;
  for (std::size_t i = 0; i < res.trace.records.size(); ++i) {
    const auto& r = res.trace.records[i];
    CHECK(r.iteration == static_cast<int>(i) + 1);
    CHECK(r.beta > 0.0);
    CHECK(r.beta >= cfg.beta0 * std::pow(0.95, static_cast<double>(i)) * (1 - 1e-12));
    CHECK(r.beta <= cfg.beta0 * std::pow(1.05, static_cast<double>(i)) * (1 + 1e-12));
    if (r.accepted) {
      CHECK(r.cost.total < last);
      last = r.cost.total;
    }
  }
  CHECK(last < res.trace.initial.total);
  CHECK(res.reference == data.keystone.reference_band());
  REQUIRE(res.weights.has_value());

  const auto dir = scratch_dir("trace");
  write_trace_csv(res.trace, dir + "/t.csv");
  std::istringstream in(read_file(dir + "/t.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,total,data,prior,beta,accepted");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(res.trace.records.size()) + 1);
}

TEST_CASE("config validation") {
  SolverConfig c;
  c.beta0 = 0.0;
  CHECK_THROWS_AS(validate(c), Error);
  c = SolverConfig{};
  c.lambda = -1.0;
  CHECK_THROWS_AS(validate(c), Error);
  c = SolverConfig{};
  c.btv.alpha = 1.5;
  CHECK_THROWS_AS(validate(c), Error);
}

// Licensed under the Apache License 2.0 (see LICENSE file).
#include "solver.hpp"

#include <cmath>
#include <fstream>

#include "metrics.hpp"
#include "parallel.hpp"

namespace ksr {

const char* to_string(FidelityNorm f) { return f == FidelityNorm::L2 ? "L2" : "L1"; }

const char* to_string(PriorKind p) {
  switch (p) {
    case PriorKind::RBTV: return "RBTV";
    case PriorKind::BTV: return "BTV";
    case PriorKind::TV: return "TV";
  }
  return "?";
}

void validate(const SolverConfig& cfg) {
  validate(cfg.btv);
  if (!(cfg.lambda >= 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
  if (!(cfg.beta0 > 0.0)) throw Error(ErrorCode::invalid_argument, "beta0 must be positive");
  if (cfg.scale < 1) throw Error(ErrorCode::invalid_argument, "scale must be >= 1");
  if (cfg.max_iters < 0) throw Error(ErrorCode::invalid_argument, "max_iters must be >= 0");
  if (!(cfg.rate_up > 0.0) || !(cfg.rate_down > 0.0)) throw Error(ErrorCode::invalid_argument, "rates must be positive");
  if (!(cfg.conv_tol >= 0.0) || cfg.conv_patience < 1)
    throw Error(ErrorCode::invalid_argument, "convergence tolerance/patience invalid");
  if (cfg.rmap_window < 1) throw Error(ErrorCode::invalid_argument, "rmap window must be >= 1");
  if (!(cfg.tv_eps > 0.0)) throw Error(ErrorCode::invalid_argument, "tv epsilon must be positive");
}

namespace {

void check_channels(const ImageGrid& x, const std::vector<Channel>& channels) {
  if (channels.empty()) throw Error(ErrorCode::invalid_argument, "at least one channel is required");
  for (const auto& ch : channels) {
    validate_channel(ch.model);
    require_same_shape(ch.y, ch.model.coeffs, "channel observation");
    if (x.rows() != ch.model.scale * ch.y.rows() || x.cols() != ch.model.scale * ch.y.cols())
      throw Error(ErrorCode::dimension_mismatch, "HR estimate does not match channel " + std::to_string(ch.model.band));
  }
}

std::vector<ImageGrid> residuals(const ImageGrid& x, const std::vector<Channel>& channels, int threads) {
  std::vector<ImageGrid> res(channels.size());
  parallel_for(static_cast<int>(channels.size()), threads,
               [&](int k) { res[k] = channels[k].y - forward(x, channels[k].model); });
  return res;
}

double prior_cost(const ImageGrid& x, const SolverConfig& cfg, const std::optional<ImageGrid>& w) {
  switch (cfg.prior) {
    case PriorKind::TV: return tv_cost(x, cfg.tv_eps);
    case PriorKind::BTV: return btv_cost(x, cfg.btv);
    case PriorKind::RBTV: return btv_cost(x, cfg.btv, w);
  }
  return 0.0;
}

ImageGrid prior_gradient(const ImageGrid& x, const SolverConfig& cfg, const std::optional<ImageGrid>& w) {
  switch (cfg.prior) {
    case PriorKind::TV: return tv_gradient(x, cfg.tv_eps);
    case PriorKind::BTV: return btv_subgradient(x, cfg.btv);
    case PriorKind::RBTV: return btv_subgradient(x, cfg.btv, w);
  }
  return ImageGrid(x.rows(), x.cols(), 0.0);
}

CostParts cost_from_residuals(const ImageGrid& x, const std::vector<ImageGrid>& res, const SolverConfig& cfg,
                              const std::optional<ImageGrid>& w) {
  CostParts c;
  for (const auto& r : res)
    for (double v : r.pixels()) c.data += cfg.fidelity == FidelityNorm::L2 ? v * v : std::abs(v);
  c.prior = cfg.lambda > 0.0 ? cfg.lambda * prior_cost(x, cfg, w) : 0.0;
  c.total = c.data + c.prior;
  return c;
}

ImageGrid gradient_from_residuals(const ImageGrid& x, const std::vector<Channel>& channels,
                                  const std::vector<ImageGrid>& res, const SolverConfig& cfg,
                                  const std::optional<ImageGrid>& w) {
  std::vector<ImageGrid> back(channels.size());
  parallel_for(static_cast<int>(channels.size()), cfg.threads, [&](int k) {
    if (cfg.fidelity == FidelityNorm::L2) {
      back[k] = adjoint(res[k], channels[k].model) * -2.0;
    } else {
      ImageGrid s = res[k];
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = s[i] > 0.0 ? 1.0 : (s[i] < 0.0 ? -1.0 : 0.0);
      back[k] = adjoint(s, channels[k].model) * -1.0;
    }
  });
  ImageGrid g(x.rows(), x.cols(), 0.0);
  for (const auto& b : back) g += b;
  if (cfg.lambda > 0.0) g += prior_gradient(x, cfg, w) * cfg.lambda;
  return g;
}

std::optional<ImageGrid> prior_weights(const ImageGrid& x, const SolverConfig& cfg) {
  if (cfg.prior != PriorKind::RBTV) return std::nullopt;
  return compute_rmap(x, cfg.rmap_window).w;
}

}  // namespace

CostParts total_cost(const ImageGrid& x, const std::vector<Channel>& channels, const SolverConfig& cfg,
                     const std::optional<ImageGrid>& w) {
  validate(cfg);
  check_channels(x, channels);
  return cost_from_residuals(x, residuals(x, channels, cfg.threads), cfg, w);
}

ImageGrid descent_direction(const ImageGrid& x, const std::vector<Channel>& channels, const SolverConfig& cfg,
                            const std::optional<ImageGrid>& w) {
  validate(cfg);
  check_channels(x, channels);
  return gradient_from_residuals(x, channels, residuals(x, channels, cfg.threads), cfg, w);
}

StepSchedule::StepSchedule(const SolverConfig& cfg)
    : beta_(cfg.beta0),
      up_(cfg.rate_up),
      down_(cfg.rate_down),
      tol_(cfg.conv_tol),
      patience_(cfg.conv_patience),
      literal_(cfg.paper_literal) {}

StepSchedule::Decision StepSchedule::update(double previous_cost, double new_cost) {
  Decision d{};
  d.beta_used = beta_;
  const bool decreased = new_cost < previous_cost;
  d.accepted = decreased || literal_;
  beta_ *= decreased ? up_ : down_;
  d.beta_next = beta_;
  const double rel = previous_cost != 0.0 ? std::abs(previous_cost - new_cost) / std::abs(previous_cost) : 0.0;
  if (d.accepted && rel < tol_) ++streak_;
  else streak_ = 0;
  d.converged = streak_ >= patience_;
  return d;
}

void write_trace_csv(const CostTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  out << "iteration,total,data,prior,beta,accepted\n";
  out << "0," << format_double(trace.initial.total) << "," << format_double(trace.initial.data) << ","
      << format_double(trace.initial.prior) << ",,\n";
  for (const auto& r : trace.records)
    out << r.iteration << "," << format_double(r.cost.total) << "," << format_double(r.cost.data) << ","
        << format_double(r.cost.prior) << "," << format_double(r.beta) << "," << (r.accepted ? 1 : 0) << "\n";
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

int pick_reference(const std::vector<Channel>& channels, const SolverConfig& cfg) {
  if (channels.empty()) throw Error(ErrorCode::invalid_argument, "at least one channel is required");
  if (cfg.reference >= 0) {
    if (cfg.reference >= static_cast<int>(channels.size()))
      throw Error(ErrorCode::invalid_argument, "reference channel out of range");
    return cfg.reference;
  }
  for (std::size_t k = 0; k < channels.size(); ++k)
    if (channels[k].model.shifts.is_zero()) return static_cast<int>(k);
  return static_cast<int>(channels.size() / 2);
}

ImageGrid initial_estimate(const std::vector<Channel>& channels, int reference) {
  const Channel& ref = channels.at(reference);
  ImageGrid lr = ref.y;
  for (std::size_t i = 0; i < lr.size(); ++i) {
    const double s = ref.model.coeffs[i];
    if (!(s > 0.0)) throw Error(ErrorCode::numerical, "reference channel has a non-positive coefficient");
    lr[i] /= s;
  }
  return upsample_bicubic(lr, ref.model.scale, ref.model.psf.center_offset_r());
}

SolveResult super_resolve(const std::vector<Channel>& channels, const SolverConfig& cfg) {
  validate(cfg);
  SolveResult out;
  out.reference = pick_reference(channels, cfg);
  for (const auto& ch : channels)
    if (ch.model.scale != cfg.scale) throw Error(ErrorCode::invalid_argument, "channel scale differs from solver scale");
  out.x0 = initial_estimate(channels, out.reference);
  check_channels(out.x0, channels);
  ImageGrid x = out.x0;
  out.weights = prior_weights(x, cfg);

  auto res = residuals(x, channels, cfg.threads);
  CostParts cost = cost_from_residuals(x, res, cfg, out.weights);
  if (!std::isfinite(cost.total)) throw Error(ErrorCode::numerical, "initial cost is not finite");
  out.trace.initial = cost;

  StepSchedule schedule(cfg);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const ImageGrid g = gradient_from_residuals(x, channels, res, cfg, out.weights);
    ImageGrid candidate = x - g * schedule.beta();
    auto cand_res = residuals(candidate, channels, cfg.threads);
    const CostParts cand_cost = cost_from_residuals(candidate, cand_res, cfg, out.weights);
    if (!std::isfinite(cand_cost.total))
      throw Error(ErrorCode::numerical, "cost became non-finite at iteration " + std::to_string(it));
    const auto d = schedule.update(cost.total, cand_cost.total);
    out.trace.records.push_back({it, cand_cost, d.beta_used, d.accepted});
    if (d.accepted) {
      x = std::move(candidate);
      res = std::move(cand_res);
      cost = cand_cost;
      if (cfg.recompute_weights && out.weights) {
        out.weights = prior_weights(x, cfg);
        cost = cost_from_residuals(x, res, cfg, out.weights);
      }
    }
    if (d.converged) {
      out.trace.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  return out;
}

}  // namespace ksr

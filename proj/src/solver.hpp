// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "operators.hpp"
#include "priors.hpp"
#include "raster.hpp"

namespace ksr {

enum class FidelityNorm { L2, L1 };
enum class PriorKind { RBTV, BTV, TV };

const char* to_string(FidelityNorm f);
const char* to_string(PriorKind p);

struct SolverConfig {
  double lambda = 0.015;
  double beta0 = 0.8;
  BtvConfig btv{4, 0.2};
  int scale = 2;
  int max_iters = 30;
  FidelityNorm fidelity = FidelityNorm::L2;
  PriorKind prior = PriorKind::RBTV;
  double rate_up = 1.05;
  double rate_down = 0.95;
  double conv_tol = 0.01;
  int conv_patience = 3;
  int rmap_window = 2;
  bool recompute_weights = false;
  // Keep every step and only adapt beta (no revert on a cost increase).
  bool paper_literal = false;
  double tv_eps = 1e-8;
  // Channel index whose observation seeds the initial estimate; -1 picks the
  // first channel without shifts.
  int reference = -1;
  int threads = 1;
};

void validate(const SolverConfig& cfg);

struct Channel {
  ImageGrid y;
  ChannelModel model;
};

struct CostParts {
  double total = 0.0;
  double data = 0.0;
  double prior = 0.0;
};

CostParts total_cost(const ImageGrid& x, const std::vector<Channel>& channels, const SolverConfig& cfg,
                     const std::optional<ImageGrid>& w);
// Gradient of total_cost; the update subtracts it.
ImageGrid descent_direction(const ImageGrid& x, const std::vector<Channel>& channels, const SolverConfig& cfg,
                            const std::optional<ImageGrid>& w);

// Learning-rate schedule and stopping rule.
class StepSchedule {
 public:
  struct Decision {
    bool accepted;
    bool converged;
    double beta_used;
    double beta_next;
  };

  explicit StepSchedule(const SolverConfig& cfg);
  double beta() const { return beta_; }
  int streak() const { return streak_; }
  Decision update(double previous_cost, double new_cost);

 private:
  double beta_;
  double up_, down_, tol_;
  int patience_;
  bool literal_;
  int streak_ = 0;
};

struct CostRecord {
  int iteration = 0;
  CostParts cost;  // of the candidate iterate
  double beta = 0.0;
  bool accepted = false;
};

struct CostTrace {
  CostParts initial;
  std::vector<CostRecord> records;
  bool converged = false;
};

void write_trace_csv(const CostTrace& trace, const std::string& path);

struct SolveResult {
  ImageGrid x;
  ImageGrid x0;
  std::optional<ImageGrid> weights;
  CostTrace trace;
  int reference = 0;
};

int pick_reference(const std::vector<Channel>& channels, const SolverConfig& cfg);
// Bicubic upsample of the reference observation divided by its coefficients.
ImageGrid initial_estimate(const std::vector<Channel>& channels, int reference);
SolveResult super_resolve(const std::vector<Channel>& channels, const SolverConfig& cfg);

}  // namespace ksr

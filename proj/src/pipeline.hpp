// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "fusion.hpp"
#include "operators.hpp"
#include "raster.hpp"
#include "restoration.hpp"
#include "solver.hpp"
#include "synth.hpp"

namespace ksr {

struct CommandOptions {
  std::string config_path;
  std::string output_dir;  // empty: [output] dir from the config, else "."
  bool skip_restore = false;
  bool paper_literal = false;
  std::optional<std::uint64_t> seed;
};

// Config section readers; unknown keys are rejected with their line numbers.
SceneSpec scene_from_config(const Config& cfg);
SolverConfig solver_from_config(const Config& cfg);
RestorationConfig restoration_from_config(const Config& cfg);
Psf detector_psf_from_config(const Config& cfg);

// Floors the cube at `floor`, derives per-band coefficient maps and wraps each band as a channel.
std::vector<Channel> build_channels(const HyperCube& cube, const KeystoneModel& keystone, const Psf& psf, int scale,
                                    double floor);

struct RunSummary {
  int iterations = 0;
  bool converged = false;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double mean_sam_deg = 0.0;
  std::optional<double> psnr_pan;
  std::optional<double> psnr_bicubic;
};

void cmd_synth(const CommandOptions& opts);
RunSummary cmd_run(const CommandOptions& opts);
void cmd_compare(const CommandOptions& opts);

std::string sha256_file(const std::string& path);

}  // namespace ksr

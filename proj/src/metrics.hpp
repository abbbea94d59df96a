// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "raster.hpp"
#include "solver.hpp"

namespace ksr {

struct SpectrumBin {
  double frequency;  // bin centre, cycles/pixel
  double power;      // mean |F|^2 / N over the annulus (0 when empty)
  int count;         // frequencies assigned to the bin
};

// Bin centres b * 0.5 / (n_bins - 1); every non-DC frequency goes to its nearest
// centre, so radii beyond 0.5 (grid corners) land in the last bin.
std::vector<SpectrumBin> radial_power_spectrum(const ImageGrid& img, int n_bins);
// Sum of |F|^2 / N over frequencies with f_lo <= radius <= f_hi (mean removed).
double band_power(const ImageGrid& img, double f_lo, double f_hi);

// +infinity for identical images.
double psnr(const ImageGrid& a, const ImageGrid& b, double peak);
ImageGrid spectral_angle(const HyperCube& a, const HyperCube& b);
double mean_spectral_angle(const HyperCube& a, const HyperCube& b);

// Isotropic TV with forward differences (replicated boundary) and sqrt(|g|^2 + eps).
double tv_cost(const ImageGrid& x, double eps = 1e-8);
ImageGrid tv_gradient(const ImageGrid& x, double eps = 1e-8);

struct MethodSpec {
  FidelityNorm fidelity = FidelityNorm::L2;
  PriorKind prior = PriorKind::RBTV;
  std::string name() const;
};
MethodSpec parse_method(const std::string& text);
std::vector<MethodSpec> all_methods();

struct MethodResult {
  std::string name;
  std::vector<SpectrumBin> spectrum;
  double hf_power = 0.0;
  std::optional<double> psnr_db;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  ImageGrid image;
};

struct CompareReport {
  MethodResult baseline;  // bicubic initial estimate
  std::vector<MethodResult> methods;
  double hf_lo = 0.25;
  double hf_hi = 0.5;
};

struct CompareOptions {
  int n_bins = 32;
  double hf_lo = 0.25;
  double hf_hi = 0.5;
  // Peak for PSNR; <= 0 uses the truth maximum.
  double peak = 0.0;
};

CompareReport compare_methods(const std::vector<Channel>& channels, const SolverConfig& base,
                              const std::vector<MethodSpec>& methods, const std::optional<ImageGrid>& truth,
                              const CompareOptions& opts = {});

void write_spectrum_csv(const std::vector<std::string>& names, const std::vector<std::vector<SpectrumBin>>& spectra,
                        const std::string& path);
void write_compare_csv(const CompareReport& report, const std::string& path);
void write_spectrum_plot_svg(const std::vector<std::string>& names,
                             const std::vector<std::vector<SpectrumBin>>& spectra, const std::string& path);

}  // namespace ksr

// Licensed under the Apache License 2.0 (see LICENSE file).
#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "fft.hpp"
#include "parallel.hpp"

namespace ksr {

namespace {

std::vector<double> centered_power(const ImageGrid& img) {
  if (img.rows() < 2 || img.cols() < 2) throw Error(ErrorCode::invalid_argument, "image must be at least 2x2");
  require_finite(img, "power spectrum");
  ImageGrid centered = img;
  const double m = mean(img);
  for (std::size_t i = 0; i < centered.size(); ++i) centered[i] -= m;
  const auto F = fft2(centered);
  const double n = static_cast<double>(img.size());
  std::vector<double> p(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) p[i] = std::norm(F[i]) / n;
  p[0] = 0.0;
  return p;
}

double radius_at(int i, int j, int rows, int cols) {
  const double fy = fft_frequency(i, rows), fx = fft_frequency(j, cols);
  return std::sqrt(fx * fx + fy * fy);
}

}  // namespace

std::vector<SpectrumBin> radial_power_spectrum(const ImageGrid& img, int n_bins) {
  if (n_bins < 2) throw Error(ErrorCode::invalid_argument, "radial spectrum needs at least 2 bins");
  const auto p = centered_power(img);
  const double step = 0.5 / (n_bins - 1);
  std::vector<double> acc(n_bins, 0.0);
  std::vector<int> count(n_bins, 0);
  for (int i = 0; i < img.rows(); ++i) {
    for (int j = 0; j < img.cols(); ++j) {
      if (i == 0 && j == 0) continue;
      const int b = std::min(n_bins - 1, static_cast<int>(std::lround(radius_at(i, j, img.rows(), img.cols()) / step)));
      acc[b] += p[static_cast<std::size_t>(i) * img.cols() + j];
      ++count[b];
    }
  }
  std::vector<SpectrumBin> out(n_bins);
  for (int b = 0; b < n_bins; ++b) out[b] = {b * step, count[b] ? acc[b] / count[b] : 0.0, count[b]};
  return out;
}

double band_power(const ImageGrid& img, double f_lo, double f_hi) {
  const auto p = centered_power(img);
  double total = 0.0;
  for (int i = 0; i < img.rows(); ++i) {
    for (int j = 0; j < img.cols(); ++j) {
      const double rho = radius_at(i, j, img.rows(), img.cols());
      if (rho >= f_lo && rho <= f_hi) total += p[static_cast<std::size_t>(i) * img.cols() + j];
    }
  }
  return total;
}

double psnr(const ImageGrid& a, const ImageGrid& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (!(peak > 0.0)) throw Error(ErrorCode::invalid_argument, "psnr peak must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

ImageGrid spectral_angle(const HyperCube& a, const HyperCube& b) {
  if (a.n_bands() != b.n_bands() || a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::dimension_mismatch, "spectral angle needs cubes of identical geometry");
  ImageGrid out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (int k = 0; k < a.n_bands(); ++k) {
      const double x = a.band(k)[i], y = b.band(k)[i];
      ab += x * y;
      aa += x * x;
      bb += y * y;
    }
    if (aa == 0.0 || bb == 0.0)
      throw Error(ErrorCode::degenerate, "zero spectrum at pixel " + std::to_string(i));
    const double c = std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
    out[i] = std::acos(c) * 180.0 / std::numbers::pi;
  }
  return out;
}

double mean_spectral_angle(const HyperCube& a, const HyperCube& b) { return mean(spectral_angle(a, b)); }

double tv_cost(const ImageGrid& x, double eps) {
  double total = 0.0;
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) {
      const double gx = x.at_clamped(r, c + 1) - x(r, c);
      const double gy = x.at_clamped(r + 1, c) - x(r, c);
      total += std::sqrt(gx * gx + gy * gy + eps);
    }
  }
  return total;
}

ImageGrid tv_gradient(const ImageGrid& x, double eps) {
  const int R = x.rows(), C = x.cols();
  ImageGrid g(R, C, 0.0);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const int cn = std::min(c + 1, C - 1), rn = std::min(r + 1, R - 1);
      const double gx = x(r, cn) - x(r, c);
      const double gy = x(rn, c) - x(r, c);
      const double n = std::sqrt(gx * gx + gy * gy + eps);
      g(r, cn) += gx / n;
      g(r, c) -= gx / n;
      g(rn, c) += gy / n;
      g(r, c) -= gy / n;
    }
  }
  return g;
}

std::string MethodSpec::name() const { return std::string(to_string(fidelity)) + "+" + to_string(prior); }

MethodSpec parse_method(const std::string& text) {
  std::string t;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) t += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  const auto plus = t.find('+');
  if (plus == std::string::npos) throw Error(ErrorCode::config, "method '" + text + "' must look like L2+RBTV");
  MethodSpec m;
  const std::string f = t.substr(0, plus), p = t.substr(plus + 1);
  if (f == "L2") m.fidelity = FidelityNorm::L2;
  else if (f == "L1") m.fidelity = FidelityNorm::L1;
  else throw Error(ErrorCode::config, "unknown fidelity norm '" + f + "'");
  if (p == "RBTV") m.prior = PriorKind::RBTV;
  else if (p == "BTV") m.prior = PriorKind::BTV;
  else if (p == "TV") m.prior = PriorKind::TV;
  else throw Error(ErrorCode::config, "unknown prior '" + p + "'");
  return m;
}

std::vector<MethodSpec> all_methods() {
  std::vector<MethodSpec> out;
  for (auto f : {FidelityNorm::L1, FidelityNorm::L2})
    for (auto p : {PriorKind::TV, PriorKind::BTV, PriorKind::RBTV}) out.push_back({f, p});
  return out;
}

CompareReport compare_methods(const std::vector<Channel>& channels, const SolverConfig& base,
                              const std::vector<MethodSpec>& methods, const std::optional<ImageGrid>& truth,
                              const CompareOptions& opts) {
  if (methods.empty()) throw Error(ErrorCode::invalid_argument, "no methods to compare");
  CompareReport report;
  report.hf_lo = opts.hf_lo;
  report.hf_hi = opts.hf_hi;
  const double peak = truth ? (opts.peak > 0.0 ? opts.peak : max_value(*truth)) : 0.0;

  auto describe = [&](MethodResult& m) {
    m.spectrum = radial_power_spectrum(m.image, opts.n_bins);
    m.hf_power = band_power(m.image, opts.hf_lo, opts.hf_hi);
    if (truth) m.psnr_db = psnr(m.image, *truth, peak);
  };

  report.baseline.name = "bicubic";
  report.baseline.image = initial_estimate(channels, pick_reference(channels, base));
  describe(report.baseline);

  report.methods.resize(methods.size());
  SolverConfig inner = base;
  inner.threads = 1;
  parallel_for(static_cast<int>(methods.size()), base.threads, [&](int i) {
    SolverConfig cfg = inner;
    cfg.fidelity = methods[i].fidelity;
    cfg.prior = methods[i].prior;
    auto solved = super_resolve(channels, cfg);
    MethodResult& m = report.methods[i];
    m.name = methods[i].name();
    m.iterations = static_cast<int>(solved.trace.records.size());
    m.initial_cost = solved.trace.initial.total;
    m.final_cost = m.initial_cost;
    for (const auto& r : solved.trace.records)
      if (r.accepted) m.final_cost = r.cost.total;
    m.image = std::move(solved.x);
    describe(m);
  });
  return report;
}

void write_spectrum_csv(const std::vector<std::string>& names, const std::vector<std::vector<SpectrumBin>>& spectra,
                        const std::string& path) {
  if (names.size() != spectra.size() || spectra.empty())
    throw Error(ErrorCode::invalid_argument, "spectrum names and series differ in count");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  out << "frequency";
  for (const auto& n : names) out << "," << n;
  out << "\n";
  for (std::size_t b = 0; b < spectra.front().size(); ++b) {
    out << format_double(spectra.front()[b].frequency);
    for (const auto& s : spectra) out << "," << format_double(s.at(b).power);
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

void write_compare_csv(const CompareReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  out << "method,psnr_db,hf_power,iterations,initial_cost,final_cost\n";
  auto row = [&](const MethodResult& m, bool solved) {
    out << m.name << "," << (m.psnr_db ? format_double(*m.psnr_db) : "") << "," << format_double(m.hf_power) << ",";
    if (solved) out << m.iterations << "," << format_double(m.initial_cost) << "," << format_double(m.final_cost);
    else out << ",,";
    out << "\n";
  };
  row(report.baseline, false);
  for (const auto& m : report.methods) row(m, true);
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

void write_spectrum_plot_svg(const std::vector<std::string>& names,
                             const std::vector<std::vector<SpectrumBin>>& spectra, const std::string& path) {
  if (names.size() != spectra.size() || spectra.empty())
    throw Error(ErrorCode::invalid_argument, "spectrum names and series differ in count");
  constexpr double W = 720, H = 440, L = 70, R = 170, T = 20, B = 50;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : spectra)
    for (const auto& b : s)
      if (b.power > 0.0) {
        lo = std::min(lo, std::log10(b.power));
        hi = std::max(hi, std::log10(b.power));
      }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-9) hi = lo + 1.0;
  auto px = [&](double f) { return L + (W - L - R) * f / 0.5; };
  auto py = [&](double lp) { return T + (H - T - B) * (hi - lp) / (hi - lo); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double f = 0.1 * i;
    out << "<text x=\"" << px(f) << "\" y=\"" << H - B + 18 << "\" font-size=\"12\" text-anchor=\"middle\">"
        << format_double(f) << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 8 << "\" font-size=\"13\" text-anchor=\"middle\">"
      << "frequency (cycles/pixel)</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\" text-anchor=\"middle\">log10 power</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double lp = lo + (hi - lo) * i / 4.0;
    out << "<text x=\"" << L - 6 << "\" y=\"" << py(lp) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
        << std::round(lp * 100.0) / 100.0 << "</text>\n";
  }
  for (std::size_t k = 0; k < spectra.size(); ++k) {
    const char* color = colors[k % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& b : spectra[k])
      if (b.power > 0.0) out << px(b.frequency) << "," << py(std::log10(b.power)) << " ";
    out << "\"/>\n";
    out << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << color
        << "\">" << names[k] << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace ksr

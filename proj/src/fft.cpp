// Licensed under the Apache License 2.0 (see LICENSE file).
#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace ksr {

namespace {

// Planner calls are not thread-safe in FFTW; execution on a private plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

Spectrum2D run(const Spectrum2D& in, int rows, int cols, int sign) {
  Spectrum2D out(in.size());
  Spectrum2D work = in;
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(rows, cols, reinterpret_cast<fftw_complex*>(work.data()),
                            reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
  }
  if (!plan) throw Error(ErrorCode::numerical, "FFT planning failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

Spectrum2D fft2(const ImageGrid& img) {
  Spectrum2D in(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) in[i] = img[i];
  return run(in, img.rows(), img.cols(), FFTW_FORWARD);
}

ImageGrid ifft2_real(const Spectrum2D& spec, int rows, int cols) {
  Spectrum2D out = run(spec, rows, cols, FFTW_BACKWARD);
  ImageGrid img(rows, cols);
  const double scale = 1.0 / (static_cast<double>(rows) * cols);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = out[i].real() * scale;
  return img;
}

Spectrum2D kernel_otf(const ImageGrid& weights, int anchor_r, int anchor_c, int rows, int cols) {
  if (weights.rows() > rows || weights.cols() > cols)
    throw Error(ErrorCode::dimension_mismatch, "kernel larger than the transform grid");
  ImageGrid grid(rows, cols, 0.0);
  for (int u = 0; u < weights.rows(); ++u) {
    for (int v = 0; v < weights.cols(); ++v) {
      const int r = ((u - anchor_r) % rows + rows) % rows;
      const int c = ((v - anchor_c) % cols + cols) % cols;
      grid(r, c) += weights(u, v);
    }
  }
  return fft2(grid);
}

double fft_frequency(int i, int n) {
  const int k = i <= (n - 1) / 2 ? i : i - n;
  return static_cast<double>(k) / n;
}

}  // namespace ksr

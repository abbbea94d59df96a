// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <complex>
#include <vector>

#include "raster.hpp"

namespace ksr {

using Spectrum2D = std::vector<std::complex<double>>;

// Unnormalized forward 2-D DFT of a real image (row-major, full complex plane).
Spectrum2D fft2(const ImageGrid& img);
// Inverse 2-D DFT divided by rows*cols; the imaginary part is discarded.
ImageGrid ifft2_real(const Spectrum2D& spec, int rows, int cols);

// Transfer function of a kernel placed on a rows x cols periodic grid with
// its anchor at the origin, matching the spatial convolution convention.
Spectrum2D kernel_otf(const ImageGrid& weights, int anchor_r, int anchor_c, int rows, int cols);

// Signed DFT frequency of index i on an n-point grid, in cycles per sample.
double fft_frequency(int i, int n);

}  // namespace ksr

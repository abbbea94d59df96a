// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksr {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  missing_file,
  size_mismatch,
  unsupported_type,
  io,
  format,
  config,
  bound_exceeded,
  missing_entry,
  duplicate_entry,
  non_finite,
  degenerate,
  numerical,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Row-major single-band raster.
class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(int rows, int cols, double fill = 0.0);
  ImageGrid(int rows, int cols, std::vector<double> pixels);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return px_.size(); }
  bool empty() const { return px_.empty(); }

  double& operator()(int r, int c) { return px_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return px_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& operator[](std::size_t i) { return px_[i]; }
  double operator[](std::size_t i) const { return px_[i]; }

  // Clamped access, i.e. edge replication.
  double at_clamped(int r, int c) const;

  double* data() { return px_.data(); }
  const double* data() const { return px_.data(); }
  const std::vector<double>& pixels() const { return px_; }

  bool same_shape(const ImageGrid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  ImageGrid& operator+=(const ImageGrid& o);
  ImageGrid& operator-=(const ImageGrid& o);
  ImageGrid& operator*=(double s);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> px_;
};

ImageGrid operator+(ImageGrid a, const ImageGrid& b);
ImageGrid operator-(ImageGrid a, const ImageGrid& b);
ImageGrid operator*(ImageGrid a, double s);
ImageGrid hadamard(const ImageGrid& a, const ImageGrid& b);
double dot(const ImageGrid& a, const ImageGrid& b);
double sum(const ImageGrid& a);
double mean(const ImageGrid& a);
double min_value(const ImageGrid& a);
double max_value(const ImageGrid& a);

// Throws non_finite if any pixel is NaN or infinite.
void require_finite(const ImageGrid& img, const char* what);
void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what);

struct BandMeta {
  int index = 0;
  std::optional<double> wavelength_nm;
};

class HyperCube {
 public:
  HyperCube() = default;
  explicit HyperCube(std::vector<ImageGrid> bands, std::vector<BandMeta> meta = {});

  int n_bands() const { return static_cast<int>(bands_.size()); }
  int rows() const { return bands_.empty() ? 0 : bands_.front().rows(); }
  int cols() const { return bands_.empty() ? 0 : bands_.front().cols(); }
  const ImageGrid& band(int k) const { return bands_.at(k); }
  ImageGrid& band(int k) { return bands_.at(k); }
  const std::vector<ImageGrid>& bands() const { return bands_; }
  const BandMeta& meta(int k) const { return meta_.at(k); }
  const std::vector<BandMeta>& meta() const { return meta_; }

 private:
  std::vector<ImageGrid> bands_;
  std::vector<BandMeta> meta_;
};

// Per-column (dx, dy) shift of one band, in pixels of the grid it is applied to.
struct ShiftField {
  std::vector<double> dx;
  std::vector<double> dy;

  static ShiftField zeros(int cols) { return {std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)}; }
  int cols() const { return static_cast<int>(dx.size()); }
  ShiftField negated() const;
  bool is_zero() const;
};

class KeystoneModel {
 public:
  static constexpr double kShiftBound = 2.0;

  KeystoneModel() = default;
  KeystoneModel(int reference_band, std::vector<ShiftField> bands);
  static KeystoneModel identity(int n_bands, int n_cols, int reference_band);

  int reference_band() const { return reference_; }
  int n_bands() const { return static_cast<int>(bands_.size()); }
  int n_cols() const { return bands_.empty() ? 0 : bands_.front().cols(); }
  const ShiftField& band(int k) const { return bands_.at(k); }
  double dx(int band, int col) const { return bands_.at(band).dx.at(col); }
  double dy(int band, int col) const { return bands_.at(band).dy.at(col); }

 private:
  int reference_ = 0;
  std::vector<ShiftField> bands_;
};

struct NoiseSpec {
  double sigma = 0.0;
  // When set, sigma is derived per band from the clean band rms.
  std::optional<double> snr_db;
};

struct CubeHeader {
  long samples = 0;
  long lines = 0;
  long bands = 0;
  long data_type = 4;
  std::size_t sample_bytes = 4;
  std::string interleave = "bsq";
  long byte_order = 0;
  long header_offset = 0;
  std::vector<double> gains, offsets, wavelengths;
  std::string binary_path;
};

// Parses and validates a header against its binary without reading samples.
CubeHeader read_cube_header(const std::string& header_path);
HyperCube load_cube(const std::string& header_path);
void save_cube(const HyperCube& cube, const std::string& header_path);
// Binary file paired with a header: "x.hdr" -> "x.img", anything else gets ".img" appended.
std::string binary_path_for(const std::string& header_path);

// reference_band < 0 infers it: the single band absent from the table, else the central band.
KeystoneModel load_keystone_table(const std::string& path, int n_bands, int n_cols, int reference_band = -1);
void save_keystone_table(const KeystoneModel& model, const std::string& path);

void save_image_csv(const ImageGrid& img, const std::string& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace ksr

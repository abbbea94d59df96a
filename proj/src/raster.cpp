// Licensed under the Apache License 2.0 (see LICENSE file).
#include "raster.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ksr {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::missing_file: return "missing_file";
    case ErrorCode::size_mismatch: return "size_mismatch";
    case ErrorCode::unsupported_type: return "unsupported_type";
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::config: return "config";
    case ErrorCode::bound_exceeded: return "bound_exceeded";
    case ErrorCode::missing_entry: return "missing_entry";
    case ErrorCode::duplicate_entry: return "duplicate_entry";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::numerical: return "numerical";
  }
  return "unknown";
}

ImageGrid::ImageGrid(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::invalid_argument, "image dimensions must be positive");
  px_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

ImageGrid::ImageGrid(int rows, int cols, std::vector<double> pixels) : rows_(rows), cols_(cols), px_(std::move(pixels)) {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::invalid_argument, "image dimensions must be positive");
  if (px_.size() != static_cast<std::size_t>(rows) * cols)
    throw Error(ErrorCode::size_mismatch, "pixel count does not match rows x cols");
}

double ImageGrid::at_clamped(int r, int c) const {
  r = std::clamp(r, 0, rows_ - 1);
  c = std::clamp(c, 0, cols_ - 1);
  return (*this)(r, c);
}

bool ImageGrid::all_finite() const {
  return std::all_of(px_.begin(), px_.end(), [](double v) { return std::isfinite(v); });
}

ImageGrid& ImageGrid::operator+=(const ImageGrid& o) {
  require_same_shape(*this, o, "image addition");
  for (std::size_t i = 0; i < px_.size(); ++i) px_[i] += o.px_[i];
  return *this;
}

ImageGrid& ImageGrid::operator-=(const ImageGrid& o) {
  require_same_shape(*this, o, "image subtraction");
  for (std::size_t i = 0; i < px_.size(); ++i) px_[i] -= o.px_[i];
  return *this;
}

ImageGrid& ImageGrid::operator*=(double s) {
  for (double& v : px_) v *= s;
  return *this;
}

ImageGrid operator+(ImageGrid a, const ImageGrid& b) { return a += b; }
ImageGrid operator-(ImageGrid a, const ImageGrid& b) { return a -= b; }
ImageGrid operator*(ImageGrid a, double s) { return a *= s; }

ImageGrid hadamard(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "pointwise product");
  ImageGrid out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

double dot(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "inner product");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sum(const ImageGrid& a) {
  double s = 0.0;
  for (double v : a.pixels()) s += v;
  return s;
}

double mean(const ImageGrid& a) { return a.empty() ? 0.0 : sum(a) / static_cast<double>(a.size()); }

double min_value(const ImageGrid& a) { return *std::min_element(a.pixels().begin(), a.pixels().end()); }
double max_value(const ImageGrid& a) { return *std::max_element(a.pixels().begin(), a.pixels().end()); }

void require_finite(const ImageGrid& img, const char* what) {
  if (!img.all_finite()) throw Error(ErrorCode::non_finite, std::string(what) + ": image contains NaN or Inf");
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
  if (!a.same_shape(b)) {
    std::ostringstream os;
    os << what << ": shape " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols();
    throw Error(ErrorCode::dimension_mismatch, os.str());
  }
}

HyperCube::HyperCube(std::vector<ImageGrid> bands, std::vector<BandMeta> meta) : bands_(std::move(bands)), meta_(std::move(meta)) {
  if (bands_.empty()) throw Error(ErrorCode::invalid_argument, "cube must have at least one band");
  for (const auto& b : bands_) {
    if (b.empty()) throw Error(ErrorCode::invalid_argument, "cube band is empty");
    require_same_shape(bands_.front(), b, "cube bands");
  }
  if (meta_.empty()) {
    meta_.resize(bands_.size());
    for (std::size_t k = 0; k < meta_.size(); ++k) meta_[k].index = static_cast<int>(k);
  }
  if (meta_.size() != bands_.size()) throw Error(ErrorCode::invalid_argument, "band metadata count differs from band count");
  for (std::size_t k = 0; k < meta_.size(); ++k)
    if (meta_[k].index != static_cast<int>(k)) throw Error(ErrorCode::invalid_argument, "band indices must be contiguous from 0");
}

ShiftField ShiftField::negated() const {
  ShiftField out = *this;
  for (double& v : out.dx) v = -v;
  for (double& v : out.dy) v = -v;
  return out;
}

bool ShiftField::is_zero() const {
  return std::all_of(dx.begin(), dx.end(), [](double v) { return v == 0.0; }) &&
         std::all_of(dy.begin(), dy.end(), [](double v) { return v == 0.0; });
}

KeystoneModel::KeystoneModel(int reference_band, std::vector<ShiftField> bands) : reference_(reference_band), bands_(std::move(bands)) {
  if (bands_.empty()) throw Error(ErrorCode::invalid_argument, "keystone model needs at least one band");
  if (reference_ < 0 || reference_ >= n_bands()) throw Error(ErrorCode::invalid_argument, "reference band out of range");
  const int cols = bands_.front().cols();
  if (cols < 1) throw Error(ErrorCode::invalid_argument, "keystone model needs at least one column");
  for (int k = 0; k < n_bands(); ++k) {
    const auto& f = bands_[k];
    if (f.cols() != cols || static_cast<int>(f.dy.size()) != cols)
      throw Error(ErrorCode::missing_entry, "keystone band " + std::to_string(k) + " does not cover every column");
    for (int c = 0; c < cols; ++c) {
      if (!std::isfinite(f.dx[c]) || !std::isfinite(f.dy[c]))
        throw Error(ErrorCode::non_finite, "keystone shift is not finite");
      if (std::abs(f.dx[c]) > kShiftBound || std::abs(f.dy[c]) > kShiftBound) {
        std::ostringstream os;
        os << "keystone shift (" << f.dx[c] << ", " << f.dy[c] << ") at band " << k << " column " << c
           << " exceeds the +/-" << kShiftBound << " pixel bound";
        throw Error(ErrorCode::bound_exceeded, os.str());
      }
    }
  }
  if (!bands_[reference_].is_zero()) throw Error(ErrorCode::invalid_argument, "reference band shifts must be zero");
}

KeystoneModel KeystoneModel::identity(int n_bands, int n_cols, int reference_band) {
  return KeystoneModel(reference_band, std::vector<ShiftField>(n_bands, ShiftField::zeros(n_cols)));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

static std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (t.empty() || res.ec != std::errc() || res.ptr != last)
    throw Error(ErrorCode::format, "not a number: '" + text + "'");
  return v;
}

static long parse_long(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw Error(ErrorCode::format, "header key '" + key + "' is not an integer: '" + text + "'");
  return v;
}

static std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

std::string binary_path_for(const std::string& header_path) {
  std::filesystem::path p(header_path);
  if (lower(p.extension().string()) == ".hdr") return p.replace_extension(".img").string();
  return header_path + ".img";
}

static std::map<std::string, std::string> parse_envi_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::missing_file, "cannot open header '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "ENVI")
    throw Error(ErrorCode::format, "'" + path + "' is not an ENVI header (first line must be ENVI)");
  std::map<std::string, std::string> keys;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::format, path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (!value.empty() && value[0] == '{') {
      while (value.find('}') == std::string::npos) {
        std::string more;
        if (!std::getline(in, more))
          throw Error(ErrorCode::format, path + ": unterminated '{' for key '" + key + "'");
        ++lineno;
        value += " " + trim(more);
      }
    }
    keys[key] = value;
  }
  return keys;
}

static std::vector<double> parse_brace_list(const std::string& value) {
  std::string body = value;
  if (!body.empty() && body.front() == '{') body.erase(0, 1);
  if (!body.empty() && body.back() == '}') body.pop_back();
  std::vector<double> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(item));
  }
  return out;
}

static std::string find_binary(const std::string& header_path) {
  std::filesystem::path p(header_path);
  std::vector<std::filesystem::path> candidates;
  candidates.emplace_back(binary_path_for(header_path));
  if (lower(p.extension().string()) == ".hdr") {
    auto stem = p;
    stem.replace_extension();
    candidates.push_back(stem);
    for (const char* ext : {".dat", ".bsq", ".raw", ".bin"}) {
      auto c = stem;
      c += ext;
      candidates.push_back(c);
    }
  }
  for (const auto& c : candidates)
    if (std::filesystem::is_regular_file(c)) return c.string();
  throw Error(ErrorCode::missing_file, "no binary file found next to header '" + header_path + "'");
}

template <class T>
static double decode(const unsigned char* p, bool swap) {
  unsigned char tmp[sizeof(T)];
  std::memcpy(tmp, p, sizeof(T));
  if (swap) std::reverse(tmp, tmp + sizeof(T));
  T v;
  std::memcpy(&v, tmp, sizeof(T));
  return static_cast<double>(v);
}

CubeHeader read_cube_header(const std::string& header_path) {
  auto keys = parse_envi_header(header_path);
  auto need = [&](const char* k) -> const std::string& {
    auto it = keys.find(k);
    if (it == keys.end()) throw Error(ErrorCode::format, "header '" + header_path + "' lacks key '" + k + "'");
    return it->second;
  };
  CubeHeader h;
  h.samples = parse_long(need("samples"), "samples");
  h.lines = parse_long(need("lines"), "lines");
  h.bands = parse_long(need("bands"), "bands");
  if (h.samples < 1 || h.lines < 1 || h.bands < 1) throw Error(ErrorCode::format, "header dimensions must be positive");
  h.data_type = parse_long(need("data type"), "data type");
  h.interleave = keys.count("interleave") ? lower(keys["interleave"]) : "bsq";
  h.byte_order = keys.count("byte order") ? parse_long(keys["byte order"], "byte order") : 0;
  h.header_offset = keys.count("header offset") ? parse_long(keys["header offset"], "header offset") : 0;

  switch (h.data_type) {
    case 1: h.sample_bytes = 1; break;
    case 2: case 12: h.sample_bytes = 2; break;
    case 3: case 4: case 13: h.sample_bytes = 4; break;
    case 5: h.sample_bytes = 8; break;
    default:
      throw Error(ErrorCode::unsupported_type, "unsupported ENVI data type " + std::to_string(h.data_type));
  }
  if (h.interleave != "bsq" && h.interleave != "bil" && h.interleave != "bip")
    throw Error(ErrorCode::unsupported_type, "unsupported interleave '" + h.interleave + "'");
  if (h.byte_order != 0 && h.byte_order != 1) throw Error(ErrorCode::format, "byte order must be 0 or 1");
  if (h.header_offset < 0) throw Error(ErrorCode::format, "header offset must be >= 0");

  h.gains.assign(h.bands, 1.0);
  h.offsets.assign(h.bands, 0.0);
  if (keys.count("data gain values")) {
    h.gains = parse_brace_list(keys["data gain values"]);
    if (static_cast<long>(h.gains.size()) != h.bands) throw Error(ErrorCode::format, "data gain values count differs from bands");
  }
  if (keys.count("data offset values")) {
    h.offsets = parse_brace_list(keys["data offset values"]);
    if (static_cast<long>(h.offsets.size()) != h.bands) throw Error(ErrorCode::format, "data offset values count differs from bands");
  }
  if (keys.count("wavelength")) {
    h.wavelengths = parse_brace_list(keys["wavelength"]);
    if (static_cast<long>(h.wavelengths.size()) != h.bands) throw Error(ErrorCode::format, "wavelength count differs from bands");
  }

  h.binary_path = find_binary(header_path);
  const std::size_t n = static_cast<std::size_t>(h.samples) * h.lines * h.bands;
  const auto file_size = std::filesystem::file_size(h.binary_path);
  if (file_size != static_cast<std::uintmax_t>(h.header_offset) + n * h.sample_bytes) {
    std::ostringstream os;
    os << "binary '" << h.binary_path << "' has " << file_size << " bytes, header declares " << h.bands << "x" << h.lines
       << "x" << h.samples << " samples of " << h.sample_bytes << " bytes";
    throw Error(ErrorCode::size_mismatch, os.str());
  }
  return h;
}

HyperCube load_cube(const std::string& header_path) {
  const CubeHeader h = read_cube_header(header_path);
  const long samples = h.samples, lines = h.lines, bands = h.bands, dtype = h.data_type;
  const std::string& interleave = h.interleave;
  const std::string& bin = h.binary_path;
  const std::size_t width = h.sample_bytes;
  const long offset = h.header_offset, byte_order = h.byte_order;
  const std::size_t n = static_cast<std::size_t>(samples) * lines * bands;
  std::vector<unsigned char> raw(n * width);
  {
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read '" + bin + "'");
    in.seekg(offset);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw Error(ErrorCode::io, "short read from '" + bin + "'");
  }
  const bool file_big = byte_order == 1;
  const bool swap = file_big != (std::endian::native == std::endian::big);

  const auto& gains = h.gains;
  const auto& offsets = h.offsets;
  const auto& wavelengths = h.wavelengths;

  std::vector<ImageGrid> out;
  std::vector<BandMeta> meta;
  for (long k = 0; k < bands; ++k) {
    ImageGrid img(static_cast<int>(lines), static_cast<int>(samples));
    for (long r = 0; r < lines; ++r) {
      for (long c = 0; c < samples; ++c) {
        std::size_t idx = 0;
        if (interleave == "bsq") idx = (static_cast<std::size_t>(k) * lines + r) * samples + c;
        else if (interleave == "bil") idx = (static_cast<std::size_t>(r) * bands + k) * samples + c;
        else idx = (static_cast<std::size_t>(r) * samples + c) * bands + k;
        const unsigned char* p = raw.data() + idx * width;
        double v = 0.0;
        switch (dtype) {
          case 1: v = *p; break;
          case 2: v = decode<std::int16_t>(p, swap); break;
          case 3: v = decode<std::int32_t>(p, swap); break;
          case 4: v = decode<float>(p, swap); break;
          case 5: v = decode<double>(p, swap); break;
          case 12: v = decode<std::uint16_t>(p, swap); break;
          case 13: v = decode<std::uint32_t>(p, swap); break;
        }
        img(static_cast<int>(r), static_cast<int>(c)) = gains[k] * v + offsets[k];
      }
    }
    require_finite(img, "load_cube");
    out.push_back(std::move(img));
    BandMeta m;
    m.index = static_cast<int>(k);
    if (!wavelengths.empty()) m.wavelength_nm = wavelengths[k];
    meta.push_back(m);
  }
  return HyperCube(std::move(out), std::move(meta));
}

void save_cube(const HyperCube& cube, const std::string& header_path) {
  if (cube.n_bands() < 1 || cube.rows() < 1 || cube.cols() < 1)
    throw Error(ErrorCode::invalid_argument, "refusing to save an empty cube");
  for (int k = 0; k < cube.n_bands(); ++k) {
    if (cube.band(k).empty()) throw Error(ErrorCode::invalid_argument, "refusing to save a cube with an empty band");
    require_finite(cube.band(k), "save_cube");
  }
  const std::string bin = binary_path_for(header_path);
  {
    std::ofstream out(header_path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + header_path + "'");
    out << "ENVI\n";
    out << "samples = " << cube.cols() << "\n";
    out << "lines = " << cube.rows() << "\n";
    out << "bands = " << cube.n_bands() << "\n";
    out << "header offset = 0\n";
    out << "file type = ENVI Standard\n";
    out << "data type = 4\n";
    out << "interleave = bsq\n";
    out << "byte order = 0\n";
    const bool has_wl = std::all_of(cube.meta().begin(), cube.meta().end(), [](const BandMeta& m) { return m.wavelength_nm.has_value(); });
    if (has_wl) {
      out << "wavelength = {";
      for (int k = 0; k < cube.n_bands(); ++k) out << (k ? ", " : "") << format_double(*cube.meta(k).wavelength_nm);
      out << "}\n";
    }
    if (!out) throw Error(ErrorCode::io, "failed writing '" + header_path + "'");
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(cube.n_bands()) * cube.band(0).size() * 4);
  std::size_t pos = 0;
  for (int k = 0; k < cube.n_bands(); ++k) {
    for (double v : cube.band(k).pixels()) {
      const float f = static_cast<float>(v);
      std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
      for (int b = 0; b < 4; ++b) raw[pos++] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFFu);
    }
  }
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + bin + "'");
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorCode::io, "failed writing '" + bin + "'");
}

static std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

KeystoneModel load_keystone_table(const std::string& path, int n_bands, int n_cols, int reference_band) {
  if (n_bands < 1 || n_cols < 1) throw Error(ErrorCode::invalid_argument, "keystone table needs positive band and column counts");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::missing_file, "cannot open keystone table '" + path + "'");
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::map<std::pair<int, int>, std::pair<double, double>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto where = [&] { return path + ":" + std::to_string(lineno) + ": "; };
    if (!header_seen) {
      auto cols = split_csv(t);
      if (cols != std::vector<std::string>{"band", "column", "dx", "dy"})
        throw Error(ErrorCode::format, where() + "expected header 'band,column,dx,dy'");
      header_seen = true;
      continue;
    }
    auto f = split_csv(t);
    if (f.size() != 4) throw Error(ErrorCode::format, where() + "expected 4 fields");
    int band = 0, col = 0;
    double dx = 0.0, dy = 0.0;
    try {
      band = static_cast<int>(parse_long(f[0], "band"));
      col = static_cast<int>(parse_long(f[1], "column"));
      dx = parse_double(f[2]);
      dy = parse_double(f[3]);
    } catch (const Error& e) {
      throw Error(ErrorCode::format, where() + e.what());
    }
    if (band < 0 || band >= n_bands || col < 0 || col >= n_cols)
      throw Error(ErrorCode::format, where() + "band or column index out of range");
    if (!std::isfinite(dx) || !std::isfinite(dy)) throw Error(ErrorCode::non_finite, where() + "shift is not finite");
    if (std::abs(dx) > KeystoneModel::kShiftBound || std::abs(dy) > KeystoneModel::kShiftBound)
      throw Error(ErrorCode::bound_exceeded, where() + "shift exceeds the +/-2.0 pixel bound");
    if (!entries.emplace(std::make_pair(band, col), std::make_pair(dx, dy)).second)
      throw Error(ErrorCode::duplicate_entry, where() + "duplicate entry for band " + f[0] + " column " + f[1]);
  }
  if (!header_seen) throw Error(ErrorCode::format, "keystone table '" + path + "' is empty");

  std::set<int> present;
  for (const auto& [key, v] : entries) present.insert(key.first);
  if (reference_band < 0) {
    std::vector<int> absent;
    for (int k = 0; k < n_bands; ++k)
      if (!present.count(k)) absent.push_back(k);
    if (absent.size() == 1) reference_band = absent.front();
    else if (absent.empty()) reference_band = n_bands / 2;
    else {
      std::string list;
      for (int k : absent) list += (list.empty() ? "" : ", ") + std::to_string(k);
      throw Error(ErrorCode::missing_entry, "keystone table lacks entries for bands " + list);
    }
  }
  if (reference_band >= n_bands) throw Error(ErrorCode::invalid_argument, "reference band out of range");

  std::vector<ShiftField> fields(n_bands, ShiftField::zeros(n_cols));
  for (int k = 0; k < n_bands; ++k) {
    for (int c = 0; c < n_cols; ++c) {
      auto it = entries.find({k, c});
      if (k == reference_band) {
        if (it != entries.end() && (it->second.first != 0.0 || it->second.second != 0.0))
          throw Error(ErrorCode::invalid_argument, "reference band " + std::to_string(k) + " has a non-zero shift");
        continue;
      }
      if (it == entries.end())
        throw Error(ErrorCode::missing_entry,
                    "keystone table lacks band " + std::to_string(k) + " column " + std::to_string(c));
      fields[k].dx[c] = it->second.first;
      fields[k].dy[c] = it->second.second;
    }
  }
  return KeystoneModel(reference_band, std::move(fields));
}

void save_keystone_table(const KeystoneModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  out << "band,column,dx,dy\n";
  for (int k = 0; k < model.n_bands(); ++k) {
    if (k == model.reference_band()) continue;
    for (int c = 0; c < model.n_cols(); ++c)
      out << k << "," << c << "," << format_double(model.dx(k, c)) << "," << format_double(model.dy(k, c)) << "\n";
  }
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

void save_image_csv(const ImageGrid& img, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) out << (c ? "," : "") << format_double(img(r, c));
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace ksr

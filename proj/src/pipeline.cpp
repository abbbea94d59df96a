// Licensed under the Apache License 2.0 (see LICENSE file).
#include "pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "metrics.hpp"

namespace fs = std::filesystem;

namespace ksr {

namespace {

constexpr const char* kVersion = "1.0.0";

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "': " + e.what());
  }
}

// Converts a parse failure of a single key into a located config error.
template <class F>
auto config_value(const Config& cfg, const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config) throw;
    cfg.fail(key, e.what());
  }
}

void require_sections(const Config& cfg, const std::set<std::string>& allowed) {
  for (const auto& s : cfg.sections()) {
    if (allowed.count(s)) continue;
    throw Error(ErrorCode::config, cfg.origin() + ": unknown section '" + (s.empty() ? "<top level>" : s) + "'");
  }
}

std::string resolve_path(const Config& cfg, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return p.string();
  const fs::path base = fs::path(cfg.origin()).parent_path();
  return (base / p).lexically_normal().string();
}

std::string output_dir(const Config& cfg, const CommandOptions& opts, const std::string& fallback) {
  std::string dir = opts.output_dir;
  if (dir.empty()) {
    const std::string from_cfg = cfg.get_string("output.dir", "");
    dir = from_cfg.empty() ? fallback : resolve_path(cfg, from_cfg);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

class Manifest {
 public:
  void set(const std::string& section, const std::string& key, const std::string& value) {
    for (auto& [name, entries] : sections_) {
      if (name != section) continue;
      entries.emplace_back(key, value);
      return;
    }
    sections_.push_back({section, {{key, value}}});
  }
  void set(const std::string& section, const std::string& key, double value) { set(section, key, format_double(value)); }
  void set(const std::string& section, const std::string& key, long value) { set(section, key, std::to_string(value)); }
  void set(const std::string& section, const std::string& key, int value) { set(section, key, std::to_string(value)); }
  void set(const std::string& section, const std::string& key, bool value) {
    set(section, key, std::string(value ? "true" : "false"));
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
    bool first = true;
    for (const auto& [name, entries] : sections_) {
      if (!first) out << "\n";
      first = false;
      out << "[" << name << "]\n";
      for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
    }
    if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
  }

 private:
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
};

void record_solver(Manifest& m, const SolverConfig& s, const std::string& psf) {
  m.set("solver", "scale", s.scale);
  m.set("solver", "psf", psf);
  m.set("solver", "lambda", s.lambda);
  m.set("solver", "beta0", s.beta0);
  m.set("solver", "alpha", s.btv.alpha);
  m.set("solver", "P", s.btv.P);
  m.set("solver", "max_iters", s.max_iters);
  m.set("solver", "fidelity", std::string(to_string(s.fidelity)));
  m.set("solver", "prior", std::string(to_string(s.prior)));
  m.set("solver", "rate_up", s.rate_up);
  m.set("solver", "rate_down", s.rate_down);
  m.set("solver", "conv_tol", s.conv_tol);
  m.set("solver", "conv_patience", s.conv_patience);
  m.set("solver", "rmap_window", s.rmap_window);
  m.set("solver", "recompute_weights", s.recompute_weights);
  m.set("solver", "paper_literal", s.paper_literal);
  m.set("solver", "reference", s.reference);
  m.set("solver", "threads", s.threads);
}

void record_restoration(Manifest& m, const RestorationConfig& r, bool enabled) {
  m.set("restoration", "enabled", enabled);
  m.set("restoration", "kernel_size", r.kernel_size);
  m.set("restoration", "blind_iters", r.blind_iters);
  m.set("restoration", "edge_fraction", r.edge_fraction);
  m.set("restoration", "kernel_gamma", r.kernel_gamma);
  m.set("restoration", "kernel_cut", r.kernel_cut);
  m.set("restoration", "estimate_reg", r.estimate_reg);
  m.set("restoration", "center_passes", r.center_passes);
  m.set("restoration", "deconv_reg", r.deconv_reg);
  m.set("restoration", "nlm_strength", r.nlm_strength);
  m.set("restoration", "nlm_patch", r.nlm_patch);
  m.set("restoration", "nlm_search", r.nlm_search);
  m.set("restoration", "nlm_h", r.nlm_h);
  m.set("restoration", "nlm_sigma", r.nlm_sigma);
  m.set("restoration", "strict", r.strict);
}

void record_input(Manifest& m, const std::string& key, const std::string& path) {
  m.set("inputs", key, path);
  m.set("inputs", key + "_sha256", sha256_file(path));
  const std::string bin = binary_path_for(path);
  if (path.size() > 4 && path.substr(path.size() - 4) == ".hdr" && fs::is_regular_file(bin))
    m.set("inputs", key + "_data_sha256", sha256_file(bin));
}

HyperCube single_band(const ImageGrid& img) { return HyperCube({img}); }

const std::set<std::string> kInputKeys = {"cube", "keystone", "reference_band", "truth", "floor"};
const std::set<std::string> kRestorationKeys = {"enabled",      "kernel_size", "blind_iters",  "edge_fraction",
                                                "kernel_gamma", "kernel_cut",  "estimate_reg", "center_passes",
                                                "deconv_reg",   "nlm_strength", "nlm_patch",   "nlm_search",
                                                "nlm_h",        "nlm_sigma",   "strict",       "dump_kernels"};
const std::set<std::string> kSolverKeys = {"scale",     "psf",       "lambda",       "beta0",         "alpha",
                                           "P",         "max_iters", "fidelity",     "prior",         "rate_up",
                                           "rate_down", "conv_tol",  "conv_patience", "rmap_window",  "recompute_weights",
                                           "paper_literal", "threads", "reference"};
const std::set<std::string> kFusionKeys = {"strict", "floor", "register"};
const std::set<std::string> kOutputKeys = {"dir", "spectrum_bins"};
const std::set<std::string> kCompareKeys = {"methods", "spectrum_bins", "hf_lo", "hf_hi", "peak"};
const std::set<std::string> kSceneKeys = {"hr_rows",     "hr_cols",        "scale",
                                          "n_bands",     "phantom",        "intensity",
                                          "band_gains",  "keystone",       "keystone_dx_amplitude",
                                          "keystone_dy_amplitude", "keystone_table", "reference_band",
                                          "psf",         "lr_blur_sigma",  "noise_sigma",
                                          "snr_db",      "seed"};

struct LoadedInput {
  std::string cube_path, keystone_path, truth_path;
  HyperCube cube;
  KeystoneModel keystone;
  std::optional<ImageGrid> truth;
  double floor = 1e-6;
};

LoadedInput load_input(const Config& cfg) {
  LoadedInput in;
  in.cube_path = resolve_path(cfg, cfg.get_string("input.cube", ""));
  in.keystone_path = resolve_path(cfg, cfg.get_string("input.keystone", ""));
  in.truth_path = resolve_path(cfg, cfg.get_string("input.truth", ""));
  if (in.cube_path.empty()) throw Error(ErrorCode::config, cfg.origin() + ": input.cube is required");
  in.floor = cfg.get_double("input.floor", 1e-6);
  if (!(in.floor > 0.0)) cfg.fail("input.floor", "must be positive");
  const long ref = cfg.get_int("input.reference_band", -1);
  in.cube = load_cube(in.cube_path);
  if (in.keystone_path.empty()) {
    in.keystone = KeystoneModel::identity(in.cube.n_bands(), in.cube.cols(),
                                          ref >= 0 ? static_cast<int>(ref) : in.cube.n_bands() / 2);
  } else {
    in.keystone = load_keystone_table(in.keystone_path, in.cube.n_bands(), in.cube.cols(), static_cast<int>(ref));
  }
  if (!in.truth_path.empty()) in.truth = load_cube(in.truth_path).band(0);
  return in;
}

struct Prepared {
  HyperCube solver_input;
  std::vector<Psf> kernels;
  bool restored = false;
};

Prepared prepare(const LoadedInput& in, const RestorationConfig& rcfg, bool restore) {
  Prepared p;
  if (!restore) {
    p.solver_input = in.cube;
    return p;
  }
  std::vector<ImageGrid> bands;
  for (int k = 0; k < in.cube.n_bands(); ++k) {
    auto r = restore_channel(in.cube.band(k), rcfg);
    bands.push_back(std::move(r.image));
    p.kernels.push_back(std::move(r.kernel));
  }
  p.solver_input = HyperCube(std::move(bands), in.cube.meta());
  p.restored = true;
  return p;
}

}  // namespace

SceneSpec scene_from_config(const Config& cfg) {
  cfg.require_known("scene", kSceneKeys);
  SceneSpec s;
  s.hr_rows = static_cast<int>(cfg.get_int("scene.hr_rows", s.hr_rows));
  s.hr_cols = static_cast<int>(cfg.get_int("scene.hr_cols", s.hr_cols));
  s.scale = static_cast<int>(cfg.get_int("scene.scale", s.scale));
  s.n_bands = static_cast<int>(cfg.get_int("scene.n_bands", s.n_bands));
  s.phantom = config_value(cfg, "scene.phantom", [&] { return parse_phantom(cfg.get_string("scene.phantom", "texture")); });
  s.intensity = cfg.get_double("scene.intensity", s.intensity);
  for (const auto& g : cfg.get_list("scene.band_gains", {}))
    s.band_gains.push_back(config_value(cfg, "scene.band_gains", [&] { return parse_double(g); }));
  s.keystone = config_value(cfg, "scene.keystone", [&] { return parse_keystone_kind(cfg.get_string("scene.keystone", "linear")); });
  s.keystone_dx_amplitude = cfg.get_double("scene.keystone_dx_amplitude", s.keystone_dx_amplitude);
  s.keystone_dy_amplitude = cfg.get_double("scene.keystone_dy_amplitude", s.keystone_dy_amplitude);
  s.keystone_table = resolve_path(cfg, cfg.get_string("scene.keystone_table", ""));
  s.reference_band = static_cast<int>(cfg.get_int("scene.reference_band", s.reference_band));
  s.psf_recipes = cfg.get_list("scene.psf", s.psf_recipes);
  for (const auto& r : s.psf_recipes) config_value(cfg, "scene.psf", [&] { return parse_psf_recipe(r); });
  s.lr_blur_sigma = cfg.get_double("scene.lr_blur_sigma", s.lr_blur_sigma);
  s.noise.sigma = cfg.get_double("scene.noise_sigma", s.noise.sigma);
  const std::string snr = cfg.get_string("scene.snr_db", "40");
  if (snr == "none" || snr == "off") s.noise.snr_db.reset();
  else s.noise.snr_db = cfg.get_double("scene.snr_db", 40.0);
  const long seed = cfg.get_int("scene.seed", 1);
  if (seed < 0) cfg.fail("scene.seed", "must be non-negative");
  s.seed = static_cast<std::uint64_t>(seed);
  config_value(cfg, "scene", [&] {
    validate(s);
    return 0;
  });
  return s;
}

Psf detector_psf_from_config(const Config& cfg) {
  return config_value(cfg, "solver.psf", [&] { return parse_psf_recipe(cfg.get_string("solver.psf", "rect:2")); });
}

SolverConfig solver_from_config(const Config& cfg) {
  cfg.require_known("solver", kSolverKeys);
  SolverConfig s;
  s.scale = static_cast<int>(cfg.get_int("solver.scale", s.scale));
  s.lambda = cfg.get_double("solver.lambda", s.lambda);
  s.beta0 = cfg.get_double("solver.beta0", s.beta0);
  s.btv.alpha = cfg.get_double("solver.alpha", s.btv.alpha);
  s.btv.P = static_cast<int>(cfg.get_int("solver.P", s.btv.P));
  s.max_iters = static_cast<int>(cfg.get_int("solver.max_iters", s.max_iters));
  const std::string fid = cfg.get_string("solver.fidelity", "L2");
  if (fid == "L2") s.fidelity = FidelityNorm::L2;
  else if (fid == "L1") s.fidelity = FidelityNorm::L1;
  else cfg.fail("solver.fidelity", "expected L1 or L2");
  const std::string prior = cfg.get_string("solver.prior", "RBTV");
  if (prior == "RBTV") s.prior = PriorKind::RBTV;
  else if (prior == "BTV") s.prior = PriorKind::BTV;
  else if (prior == "TV") s.prior = PriorKind::TV;
  else cfg.fail("solver.prior", "expected RBTV, BTV or TV");
  s.rate_up = cfg.get_double("solver.rate_up", s.rate_up);
  s.rate_down = cfg.get_double("solver.rate_down", s.rate_down);
  s.conv_tol = cfg.get_double("solver.conv_tol", s.conv_tol);
  s.conv_patience = static_cast<int>(cfg.get_int("solver.conv_patience", s.conv_patience));
  s.rmap_window = static_cast<int>(cfg.get_int("solver.rmap_window", s.rmap_window));
  s.recompute_weights = cfg.get_bool("solver.recompute_weights", s.recompute_weights);
  s.paper_literal = cfg.get_bool("solver.paper_literal", s.paper_literal);
  s.threads = static_cast<int>(cfg.get_int("solver.threads", s.threads));
  s.reference = static_cast<int>(cfg.get_int("solver.reference", s.reference));
  config_value(cfg, "solver", [&] {
    validate(s);
    return 0;
  });
  return s;
}

RestorationConfig restoration_from_config(const Config& cfg) {
  cfg.require_known("restoration", kRestorationKeys);
  RestorationConfig r;
  r.kernel_size = static_cast<int>(cfg.get_int("restoration.kernel_size", r.kernel_size));
  r.blind_iters = static_cast<int>(cfg.get_int("restoration.blind_iters", r.blind_iters));
  r.edge_fraction = cfg.get_double("restoration.edge_fraction", r.edge_fraction);
  r.kernel_gamma = cfg.get_double("restoration.kernel_gamma", r.kernel_gamma);
  r.kernel_cut = cfg.get_double("restoration.kernel_cut", r.kernel_cut);
  r.estimate_reg = cfg.get_double("restoration.estimate_reg", r.estimate_reg);
  r.center_passes = static_cast<int>(cfg.get_int("restoration.center_passes", r.center_passes));
  r.deconv_reg = cfg.get_double("restoration.deconv_reg", r.deconv_reg);
  r.nlm_strength = cfg.get_double("restoration.nlm_strength", r.nlm_strength);
  r.nlm_patch = static_cast<int>(cfg.get_int("restoration.nlm_patch", r.nlm_patch));
  r.nlm_search = static_cast<int>(cfg.get_int("restoration.nlm_search", r.nlm_search));
  r.nlm_h = cfg.get_double("restoration.nlm_h", r.nlm_h);
  r.nlm_sigma = cfg.get_double("restoration.nlm_sigma", r.nlm_sigma);
  r.strict = cfg.get_bool("restoration.strict", r.strict);
  config_value(cfg, "restoration", [&] {
    validate(r);
    return 0;
  });
  return r;
}

std::vector<Channel> build_channels(const HyperCube& cube, const KeystoneModel& keystone, const Psf& psf, int scale,
                                    double floor) {
  std::vector<ImageGrid> floored;
  for (int k = 0; k < cube.n_bands(); ++k) {
    ImageGrid b = cube.band(k);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::max(b[i], floor);
    floored.push_back(std::move(b));
  }
  const HyperCube fc(std::move(floored), cube.meta());
  const auto coeffs = spectral_coefficients_per_band(fc, keystone);
  std::vector<Channel> channels;
  for (int k = 0; k < fc.n_bands(); ++k) {
    Channel ch;
    ch.y = fc.band(k);
    ch.model.band = k;
    ch.model.psf = psf;
    ch.model.shifts = keystone.band(k);
    ch.model.scale = scale;
    ch.model.coeffs = coeffs.bands[k];
    channels.push_back(std::move(ch));
  }
  return channels;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, "cannot open '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorCode::io, "SHA-256 initialisation failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

void cmd_synth(const CommandOptions& opts) {
  const Config cfg = Config::load(opts.config_path);
  require_sections(cfg, {"scene", "output"});
  cfg.require_known("output", kOutputKeys);
  SceneSpec spec = scene_from_config(cfg);
  if (opts.seed) spec.seed = *opts.seed;
  const std::string dir = output_dir(cfg, opts, ".");

  const SynthResult data = stage("generate", [&] { return generate(spec); });
  stage("write", [&] {
    save_cube(data.cube, join(dir, "cube.hdr"));
    save_cube(data.clean, join(dir, "clean.hdr"));
    save_cube(single_band(data.truth), join(dir, "truth.hdr"));
    save_cube(HyperCube(data.coeffs.bands), join(dir, "coeffs.hdr"));
    save_keystone_table(data.keystone, join(dir, "keystone.csv"));

    std::ofstream run(join(dir, "run.cfg"), std::ios::trunc);
    if (!run) throw Error(ErrorCode::io, "cannot write run.cfg");
    run << "# Pipeline config for this dataset; paths are relative to this file.\n";
    run << "[input]\ncube = cube.hdr\nkeystone = keystone.csv\ntruth = truth.hdr\n";
    run << "reference_band = " << data.keystone.reference_band() << "\n\n";
    run << "[restoration]\nenabled = " << (spec.lr_blur_sigma > 0.0 ? "true" : "false") << "\n\n";
    run << "[solver]\nscale = " << spec.scale << "\n";
    run << "psf = " << spec.psf_recipes[spec.psf_recipes.size() == 1 ? 0 : data.keystone.reference_band()] << "\n";
    if (!run) throw Error(ErrorCode::io, "failed writing run.cfg");

    std::ofstream noise(join(dir, "noise.csv"), std::ios::trunc);
    noise << "band,sigma\n";
    for (std::size_t k = 0; k < data.noise_sigma.size(); ++k) noise << k << "," << format_double(data.noise_sigma[k]) << "\n";
    if (!noise) throw Error(ErrorCode::io, "failed writing noise.csv");

    Manifest m;
    m.set("manifest", "command", std::string("synth"));
    m.set("manifest", "version", std::string(kVersion));
    m.set("inputs", "config", opts.config_path);
    m.set("inputs", "config_sha256", sha256_file(opts.config_path));
    m.set("scene", "hr_rows", spec.hr_rows);
    m.set("scene", "hr_cols", spec.hr_cols);
    m.set("scene", "scale", spec.scale);
    m.set("scene", "n_bands", spec.n_bands);
    m.set("scene", "phantom", std::string(to_string(spec.phantom)));
    m.set("scene", "intensity", spec.intensity);
    std::string gains;
    const auto g = spec.band_gains.empty() ? default_band_gains(spec.n_bands) : spec.band_gains;
    for (double v : g) gains += (gains.empty() ? "" : ", ") + format_double(v);
    m.set("scene", "band_gains", gains);
    m.set("scene", "keystone", std::string(to_string(spec.keystone)));
    m.set("scene", "keystone_dx_amplitude", spec.keystone_dx_amplitude);
    m.set("scene", "keystone_dy_amplitude", spec.keystone_dy_amplitude);
    if (!spec.keystone_table.empty()) m.set("scene", "keystone_table", spec.keystone_table);
    m.set("scene", "reference_band", data.keystone.reference_band());
    std::string psfs;
    for (const auto& r : spec.psf_recipes) psfs += (psfs.empty() ? "" : ", ") + r;
    m.set("scene", "psf", psfs);
    m.set("scene", "lr_blur_sigma", spec.lr_blur_sigma);
    m.set("scene", "noise_sigma", spec.noise.sigma);
    m.set("scene", "snr_db", spec.noise.snr_db ? format_double(*spec.noise.snr_db) : std::string("none"));
    m.set("scene", "seed", std::to_string(spec.seed));
    m.write(join(dir, "manifest.txt"));
    return 0;
  });
}

RunSummary cmd_run(const CommandOptions& opts) {
  const Config cfg = Config::load(opts.config_path);
  require_sections(cfg, {"input", "restoration", "solver", "fusion", "output"});
  cfg.require_known("input", kInputKeys);
  cfg.require_known("fusion", kFusionKeys);
  cfg.require_known("output", kOutputKeys);
  SolverConfig scfg = solver_from_config(cfg);
  if (opts.paper_literal) scfg.paper_literal = true;
  const RestorationConfig rcfg = restoration_from_config(cfg);
  const bool restore = cfg.get_bool("restoration.enabled", true) && !opts.skip_restore;
  const bool dump_kernels = cfg.get_bool("restoration.dump_kernels", true);
  const Psf detector = detector_psf_from_config(cfg);
  const std::string psf_recipe = cfg.get_string("solver.psf", "rect:2");
  FusionConfig fcfg = default_fusion_config(scfg.scale, detector);
  fcfg.strict = cfg.get_bool("fusion.strict", true);
  fcfg.floor = cfg.get_double("fusion.floor", fcfg.floor);
  const bool register_bands = cfg.get_bool("fusion.register", true);
  const long n_bins = cfg.get_int("output.spectrum_bins", 32);
  if (n_bins < 2) cfg.fail("output.spectrum_bins", "must be >= 2");
  const std::string dir = output_dir(cfg, opts, ".");

  const LoadedInput in = stage("load", [&] { return load_input(cfg); });
  if (scfg.reference < 0) scfg.reference = in.keystone.reference_band();
  const Prepared prep = stage("restore", [&] { return prepare(in, rcfg, restore); });
  const auto channels = stage("coefficients", [&] {
    return build_channels(prep.solver_input, in.keystone, detector, scfg.scale, in.floor);
  });
  const SolveResult solved = stage("super_resolve", [&] { return super_resolve(channels, scfg); });
  const HyperCube fused = stage("fuse", [&] {
    ImageGrid pan = solved.x;
    if (!fcfg.strict)
      for (std::size_t i = 0; i < pan.size(); ++i) pan[i] = std::max(pan[i], fcfg.floor);
    return fuse_cube(prep.solver_input, pan, scfg.scale, fcfg,
                     register_bands ? std::optional<KeystoneModel>(in.keystone) : std::nullopt);
  });

  RunSummary summary;
  summary.iterations = static_cast<int>(solved.trace.records.size());
  summary.converged = solved.trace.converged;
  summary.initial_cost = solved.trace.initial.total;
  summary.final_cost = summary.initial_cost;
  for (const auto& r : solved.trace.records)
    if (r.accepted) summary.final_cost = r.cost.total;

  std::vector<SpectrumBin> spec_pan, spec_bicubic;
  double hf_pan = 0.0, hf_bicubic = 0.0;
  stage("evaluate", [&] {
    std::vector<ImageGrid> degraded;
    for (int k = 0; k < fused.n_bands(); ++k) {
      ChannelModel ch = channels[k].model;
      ch.coeffs = ImageGrid(ch.lr_rows(), ch.lr_cols(), 1.0);
      degraded.push_back(forward(fused.band(k), ch));
    }
    summary.mean_sam_deg = mean_spectral_angle(prep.solver_input, HyperCube(std::move(degraded)));
    spec_pan = radial_power_spectrum(solved.x, static_cast<int>(n_bins));
    spec_bicubic = radial_power_spectrum(solved.x0, static_cast<int>(n_bins));
    hf_pan = band_power(solved.x, 0.25, 0.5);
    hf_bicubic = band_power(solved.x0, 0.25, 0.5);
    if (in.truth) {
      if (!in.truth->same_shape(solved.x)) throw Error(ErrorCode::dimension_mismatch, "truth does not match the pan geometry");
      const double peak = max_value(*in.truth);
      summary.psnr_pan = psnr(solved.x, *in.truth, peak);
      summary.psnr_bicubic = psnr(solved.x0, *in.truth, peak);
    }
    return 0;
  });

  stage("write", [&] {
    save_cube(prep.solver_input, join(dir, "restored.hdr"));
    save_cube(single_band(solved.x), join(dir, "pan.hdr"));
    save_cube(single_band(solved.x0), join(dir, "bicubic.hdr"));
    save_cube(fused, join(dir, "fused.hdr"));
    write_trace_csv(solved.trace, join(dir, "trace.csv"));
    write_spectrum_csv({"pan", "bicubic"}, {spec_pan, spec_bicubic}, join(dir, "spectrum.csv"));
    if (prep.restored && dump_kernels) {
      fs::create_directories(join(dir, "kernels"));
      for (std::size_t k = 0; k < prep.kernels.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "band_%03zu.csv", k);
        save_image_csv(prep.kernels[k].weights(), join(join(dir, "kernels"), name));
      }
    }
    std::ofstream mt(join(dir, "metrics.csv"), std::ios::trunc);
    mt << "metric,value\n";
    mt << "iterations," << summary.iterations << "\n";
    mt << "converged," << (summary.converged ? 1 : 0) << "\n";
    mt << "initial_cost," << format_double(summary.initial_cost) << "\n";
    mt << "final_cost," << format_double(summary.final_cost) << "\n";
    mt << "hf_power_pan," << format_double(hf_pan) << "\n";
    mt << "hf_power_bicubic," << format_double(hf_bicubic) << "\n";
    mt << "mean_spectral_angle_deg," << format_double(summary.mean_sam_deg) << "\n";
    if (summary.psnr_pan) mt << "psnr_pan_db," << format_double(*summary.psnr_pan) << "\n";
    if (summary.psnr_bicubic) mt << "psnr_bicubic_db," << format_double(*summary.psnr_bicubic) << "\n";
    if (!mt) throw Error(ErrorCode::io, "failed writing metrics.csv");

    Manifest m;
    m.set("manifest", "command", std::string("run"));
    m.set("manifest", "version", std::string(kVersion));
    if (opts.seed) m.set("manifest", "seed", std::to_string(*opts.seed));
    m.set("inputs", "config", opts.config_path);
    m.set("inputs", "config_sha256", sha256_file(opts.config_path));
    record_input(m, "cube", in.cube_path);
    if (!in.keystone_path.empty()) record_input(m, "keystone", in.keystone_path);
    if (!in.truth_path.empty()) record_input(m, "truth", in.truth_path);
    m.set("inputs", "reference_band", in.keystone.reference_band());
    m.set("inputs", "floor", in.floor);
    record_restoration(m, rcfg, restore);
    record_solver(m, scfg, psf_recipe);
    m.set("fusion", "strict", fcfg.strict);
    m.set("fusion", "floor", fcfg.floor);
    m.set("fusion", "register", register_bands);
    m.set("fusion", "phase", fcfg.phase);
    m.set("output", "spectrum_bins", n_bins);
    m.write(join(dir, "manifest.txt"));
    return 0;
  });
  return summary;
}

void cmd_compare(const CommandOptions& opts) {
  const Config cfg = Config::load(opts.config_path);
  require_sections(cfg, {"input", "restoration", "solver", "fusion", "output", "compare"});
  cfg.require_known("input", kInputKeys);
  cfg.require_known("output", kOutputKeys);
  cfg.require_known("compare", kCompareKeys);
  SolverConfig scfg = solver_from_config(cfg);
  if (opts.paper_literal) scfg.paper_literal = true;
  const RestorationConfig rcfg = restoration_from_config(cfg);
  const bool restore = cfg.get_bool("restoration.enabled", true) && !opts.skip_restore;
  const Psf detector = detector_psf_from_config(cfg);
  std::vector<MethodSpec> methods;
  for (const auto& m : cfg.get_list("compare.methods", {}))
    methods.push_back(config_value(cfg, "compare.methods", [&] { return parse_method(m); }));
  if (methods.empty()) methods = all_methods();
  CompareOptions copts;
  copts.n_bins = static_cast<int>(cfg.get_int("compare.spectrum_bins", cfg.get_int("output.spectrum_bins", 32)));
  copts.hf_lo = cfg.get_double("compare.hf_lo", copts.hf_lo);
  copts.hf_hi = cfg.get_double("compare.hf_hi", copts.hf_hi);
  copts.peak = cfg.get_double("compare.peak", copts.peak);
  if (copts.n_bins < 2) cfg.fail("compare.spectrum_bins", "must be >= 2");
  if (!(copts.hf_lo >= 0.0 && copts.hf_hi > copts.hf_lo)) cfg.fail("compare.hf_hi", "band must satisfy 0 <= hf_lo < hf_hi");
  const std::string dir = output_dir(cfg, opts, ".");

  const LoadedInput in = stage("load", [&] { return load_input(cfg); });
  if (scfg.reference < 0) scfg.reference = in.keystone.reference_band();
  const Prepared prep = stage("restore", [&] { return prepare(in, rcfg, restore); });
  const auto channels = stage("coefficients", [&] {
    return build_channels(prep.solver_input, in.keystone, detector, scfg.scale, in.floor);
  });
  const CompareReport report = stage("compare", [&] { return compare_methods(channels, scfg, methods, in.truth, copts); });

  stage("write", [&] {
    write_compare_csv(report, join(dir, "compare.csv"));
    std::vector<std::string> names{report.baseline.name};
    std::vector<std::vector<SpectrumBin>> spectra{report.baseline.spectrum};
    for (const auto& m : report.methods) {
      names.push_back(m.name);
      spectra.push_back(m.spectrum);
    }
    write_spectrum_csv(names, spectra, join(dir, "compare_spectra.csv"));
    write_spectrum_plot_svg(names, spectra, join(dir, "compare_spectra.svg"));

    Manifest m;
    m.set("manifest", "command", std::string("compare"));
    m.set("manifest", "version", std::string(kVersion));
    if (opts.seed) m.set("manifest", "seed", std::to_string(*opts.seed));
    m.set("inputs", "config", opts.config_path);
    m.set("inputs", "config_sha256", sha256_file(opts.config_path));
    record_input(m, "cube", in.cube_path);
    if (!in.keystone_path.empty()) record_input(m, "keystone", in.keystone_path);
    if (!in.truth_path.empty()) record_input(m, "truth", in.truth_path);
    m.set("inputs", "reference_band", in.keystone.reference_band());
    record_restoration(m, rcfg, restore);
    record_solver(m, scfg, cfg.get_string("solver.psf", "rect:2"));
    std::string list;
    for (const auto& ms : methods) list += (list.empty() ? "" : ", ") + ms.name();
    m.set("compare", "methods", list);
    m.set("compare", "spectrum_bins", copts.n_bins);
    m.set("compare", "hf_lo", copts.hf_lo);
    m.set("compare", "hf_hi", copts.hf_hi);
    m.write(join(dir, "manifest.txt"));
    return 0;
  });
}

}  // namespace ksr

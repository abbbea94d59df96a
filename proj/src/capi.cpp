// Licensed under the Apache License 2.0 (see LICENSE file).
#include "ksr/ksr.h"

#include <exception>
#include <new>
#include <string>

#include "fusion.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"

struct ksr_image {
  ksr::ImageGrid img;
};
struct ksr_cube {
  ksr::HyperCube cube;
};
struct ksr_keystone {
  ksr::KeystoneModel model;
};

namespace {

thread_local std::string g_last_error;

ksr_status status_of(ksr::ErrorCode c) {
  using ksr::ErrorCode;
  switch (c) {
    case ErrorCode::invalid_argument: return KSR_E_INVALID_ARGUMENT;
    case ErrorCode::dimension_mismatch: return KSR_E_DIMENSION_MISMATCH;
    case ErrorCode::missing_file: return KSR_E_MISSING_FILE;
    case ErrorCode::size_mismatch: return KSR_E_SIZE_MISMATCH;
    case ErrorCode::unsupported_type: return KSR_E_UNSUPPORTED_TYPE;
    case ErrorCode::io: return KSR_E_IO;
    case ErrorCode::format: return KSR_E_FORMAT;
    case ErrorCode::config: return KSR_E_CONFIG;
    case ErrorCode::bound_exceeded: return KSR_E_BOUND_EXCEEDED;
    case ErrorCode::missing_entry: return KSR_E_MISSING_ENTRY;
    case ErrorCode::duplicate_entry: return KSR_E_DUPLICATE_ENTRY;
    case ErrorCode::non_finite: return KSR_E_NON_FINITE;
    case ErrorCode::degenerate: return KSR_E_DEGENERATE;
    case ErrorCode::numerical: return KSR_E_NUMERICAL;
  }
  return KSR_E_INTERNAL;
}

template <class F>
ksr_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return KSR_OK;
  } catch (const ksr::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return KSR_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KSR_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return KSR_E_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw ksr::Error(ksr::ErrorCode::invalid_argument, what);
}

ksr::SolverConfig to_config(const ksr_solver_params& p) {
  ksr::SolverConfig c;
  c.lambda = p.lambda;
  c.beta0 = p.beta0;
  c.btv.alpha = p.alpha;
  c.btv.P = p.P;
  c.scale = p.scale;
  c.max_iters = p.max_iters;
  c.fidelity = p.fidelity == KSR_FIDELITY_L1 ? ksr::FidelityNorm::L1 : ksr::FidelityNorm::L2;
  c.prior = p.prior == KSR_PRIOR_TV ? ksr::PriorKind::TV : p.prior == KSR_PRIOR_BTV ? ksr::PriorKind::BTV : ksr::PriorKind::RBTV;
  c.rate_up = p.rate_up;
  c.rate_down = p.rate_down;
  c.conv_tol = p.conv_tol;
  c.conv_patience = p.conv_patience;
  c.rmap_window = p.rmap_window;
  c.paper_literal = p.paper_literal != 0;
  c.threads = p.threads;
  return c;
}

ksr::CommandOptions to_options(const ksr_run_options* o) {
  require(o && o->config_path, "config path is required");
  ksr::CommandOptions c;
  c.config_path = o->config_path;
  if (o->output_dir) c.output_dir = o->output_dir;
  c.skip_restore = o->skip_restore != 0;
  c.paper_literal = o->paper_literal != 0;
  if (o->has_seed) c.seed = o->seed;
  return c;
}

}  // namespace

extern "C" {

const char* ksr_version(void) { return "1.0.0"; }
const char* ksr_last_error(void) { return g_last_error.c_str(); }

const char* ksr_status_name(ksr_status s) {
  switch (s) {
    case KSR_OK: return "ok";
    case KSR_E_INVALID_ARGUMENT: return "invalid_argument";
    case KSR_E_DIMENSION_MISMATCH: return "dimension_mismatch";
    case KSR_E_MISSING_FILE: return "missing_file";
    case KSR_E_SIZE_MISMATCH: return "size_mismatch";
    case KSR_E_UNSUPPORTED_TYPE: return "unsupported_type";
    case KSR_E_IO: return "io";
    case KSR_E_FORMAT: return "format";
    case KSR_E_CONFIG: return "config";
    case KSR_E_BOUND_EXCEEDED: return "bound_exceeded";
    case KSR_E_MISSING_ENTRY: return "missing_entry";
    case KSR_E_DUPLICATE_ENTRY: return "duplicate_entry";
    case KSR_E_NON_FINITE: return "non_finite";
    case KSR_E_DEGENERATE: return "degenerate";
    case KSR_E_NUMERICAL: return "numerical";
    case KSR_E_INTERNAL: return "internal";
  }
  return "unknown";
}

ksr_status ksr_image_create(int rows, int cols, const double* data, ksr_image** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is null");
    require(rows >= 1 && cols >= 1, "image dimensions must be positive");
    auto h = new ksr_image{ksr::ImageGrid(rows, cols)};
    if (data) std::copy(data, data + h->img.size(), h->img.data());
    *out = h;
  });
}

void ksr_image_destroy(ksr_image* img) { delete img; }
int ksr_image_rows(const ksr_image* img) { return img ? img->img.rows() : 0; }
int ksr_image_cols(const ksr_image* img) { return img ? img->img.cols() : 0; }
const double* ksr_image_data(const ksr_image* img) { return img ? img->img.data() : nullptr; }

ksr_status ksr_cube_create(int n_bands, int rows, int cols, const double* data, ksr_cube** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is null");
    require(n_bands >= 1 && rows >= 1 && cols >= 1, "cube dimensions must be positive");
    std::vector<ksr::ImageGrid> bands;
    const std::size_t plane = static_cast<std::size_t>(rows) * cols;
    for (int k = 0; k < n_bands; ++k) {
      ksr::ImageGrid b(rows, cols);
      if (data) std::copy(data + k * plane, data + (k + 1) * plane, b.data());
      bands.push_back(std::move(b));
    }
    *out = new ksr_cube{ksr::HyperCube(std::move(bands))};
  });
}

ksr_status ksr_cube_load(const char* header_path, ksr_cube** out) {
  return guarded([&] {
    require(out && header_path, "null argument");
    *out = new ksr_cube{ksr::load_cube(header_path)};
  });
}

ksr_status ksr_cube_save(const ksr_cube* cube, const char* header_path) {
  return guarded([&] {
    require(cube && header_path, "null argument");
    ksr::save_cube(cube->cube, header_path);
  });
}

void ksr_cube_destroy(ksr_cube* cube) { delete cube; }
int ksr_cube_bands(const ksr_cube* cube) { return cube ? cube->cube.n_bands() : 0; }
int ksr_cube_rows(const ksr_cube* cube) { return cube ? cube->cube.rows() : 0; }
int ksr_cube_cols(const ksr_cube* cube) { return cube ? cube->cube.cols() : 0; }

ksr_status ksr_cube_band(const ksr_cube* cube, int band, ksr_image** out) {
  return guarded([&] {
    require(cube && out, "null argument");
    require(band >= 0 && band < cube->cube.n_bands(), "band index out of range");
    *out = new ksr_image{cube->cube.band(band)};
  });
}

ksr_status ksr_keystone_load(const char* path, int n_bands, int n_cols, int reference_band, ksr_keystone** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new ksr_keystone{ksr::load_keystone_table(path, n_bands, n_cols, reference_band)};
  });
}

ksr_status ksr_keystone_identity(int n_bands, int n_cols, int reference_band, ksr_keystone** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is null");
    *out = new ksr_keystone{ksr::KeystoneModel::identity(n_bands, n_cols, reference_band)};
  });
}

void ksr_keystone_destroy(ksr_keystone* ks) { delete ks; }
int ksr_keystone_reference(const ksr_keystone* ks) { return ks ? ks->model.reference_band() : -1; }

ksr_status ksr_keystone_shift(const ksr_keystone* ks, int band, int col, double* dx, double* dy) {
  return guarded([&] {
    require(ks && dx && dy, "null argument");
    require(band >= 0 && band < ks->model.n_bands(), "band index out of range");
    const auto& f = ks->model.band(band);
    require(col >= 0 && col < static_cast<int>(f.dx.size()), "column index out of range");
    *dx = f.dx[col];
    *dy = f.dy[col];
  });
}

ksr_status ksr_psnr(const ksr_image* a, const ksr_image* b, double peak, double* out_db) {
  return guarded([&] {
    require(a && b && out_db, "null argument");
    *out_db = ksr::psnr(a->img, b->img, peak);
  });
}

ksr_status ksr_band_power(const ksr_image* img, double f_lo, double f_hi, double* out) {
  return guarded([&] {
    require(img && out, "null argument");
    *out = ksr::band_power(img->img, f_lo, f_hi);
  });
}

ksr_status ksr_mean_spectral_angle(const ksr_cube* a, const ksr_cube* b, double* out_deg) {
  return guarded([&] {
    require(a && b && out_deg, "null argument");
    *out_deg = ksr::mean_spectral_angle(a->cube, b->cube);
  });
}

void ksr_solver_params_default(ksr_solver_params* p) {
  if (!p) return;
  const ksr::SolverConfig c;
  p->lambda = c.lambda;
  p->beta0 = c.beta0;
  p->alpha = c.btv.alpha;
  p->P = c.btv.P;
  p->scale = c.scale;
  p->max_iters = c.max_iters;
  p->fidelity = KSR_FIDELITY_L2;
  p->prior = KSR_PRIOR_RBTV;
  p->rate_up = c.rate_up;
  p->rate_down = c.rate_down;
  p->conv_tol = c.conv_tol;
  p->conv_patience = c.conv_patience;
  p->rmap_window = c.rmap_window;
  p->paper_literal = 0;
  p->threads = c.threads;
}

ksr_status ksr_super_resolve(const ksr_cube* cube, const ksr_keystone* keystone, const char* psf_recipe,
                             const ksr_solver_params* params, double floor, ksr_image** pan, ksr_image** bicubic,
                             ksr_solve_info* info) {
  return guarded([&] {
    require(cube && keystone && psf_recipe && params && pan, "null argument");
    ksr::SolverConfig cfg = to_config(*params);
    ksr::validate(cfg);
    cfg.reference = keystone->model.reference_band();
    const auto channels =
        ksr::build_channels(cube->cube, keystone->model, ksr::parse_psf_recipe(psf_recipe), cfg.scale, floor);
    auto res = ksr::super_resolve(channels, cfg);
    if (info) {
      info->iterations = static_cast<int>(res.trace.records.size());
      info->converged = res.trace.converged ? 1 : 0;
      info->initial_cost = res.trace.initial.total;
      info->final_cost = res.trace.initial.total;
      for (const auto& r : res.trace.records)
        if (r.accepted) info->final_cost = r.cost.total;
    }
    auto p = new ksr_image{std::move(res.x)};
    if (bicubic) {
      try {
        *bicubic = new ksr_image{std::move(res.x0)};
      } catch (...) {
        delete p;
        throw;
      }
    }
    *pan = p;
  });
}

ksr_status ksr_fuse(const ksr_cube* cube, const ksr_image* pan, int scale, const char* psf_recipe,
                    const ksr_keystone* keystone, ksr_cube** out) {
  return guarded([&] {
    require(cube && pan && psf_recipe && out, "null argument");
    const auto cfg = ksr::default_fusion_config(scale, ksr::parse_psf_recipe(psf_recipe));
    std::optional<ksr::KeystoneModel> ks;
    if (keystone) ks = keystone->model;
    *out = new ksr_cube{ksr::fuse_cube(cube->cube, pan->img, scale, cfg, ks)};
  });
}

void ksr_run_options_init(ksr_run_options* opts) {
  if (!opts) return;
  *opts = ksr_run_options{nullptr, nullptr, 0, 0, 0, 0};
}

ksr_status ksr_cmd_synth(const ksr_run_options* opts) {
  return guarded([&] { ksr::cmd_synth(to_options(opts)); });
}

ksr_status ksr_cmd_run(const ksr_run_options* opts, ksr_run_summary* summary) {
  return guarded([&] {
    const auto s = ksr::cmd_run(to_options(opts));
    if (!summary) return;
    summary->iterations = s.iterations;
    summary->converged = s.converged ? 1 : 0;
    summary->initial_cost = s.initial_cost;
    summary->final_cost = s.final_cost;
    summary->mean_sam_deg = s.mean_sam_deg;
    summary->has_psnr = s.psnr_pan ? 1 : 0;
    summary->psnr_pan_db = s.psnr_pan.value_or(0.0);
    summary->psnr_bicubic_db = s.psnr_bicubic.value_or(0.0);
  });
}

ksr_status ksr_cmd_compare(const ksr_run_options* opts) {
  return guarded([&] { ksr::cmd_compare(to_options(opts)); });
}

}  // extern "C"

/* Licensed under the Apache License 2.0 (see LICENSE file). */
#ifndef KSR_KSR_H
#define KSR_KSR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(KSR_BUILDING_LIBRARY)
#define KSR_API __declspec(dllexport)
#else
#define KSR_API __declspec(dllimport)
#endif
#else
#define KSR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ksr_status {
  KSR_OK = 0,
  KSR_E_INVALID_ARGUMENT = 1,
  KSR_E_DIMENSION_MISMATCH = 2,
  KSR_E_MISSING_FILE = 3,
  KSR_E_SIZE_MISMATCH = 4,
  KSR_E_UNSUPPORTED_TYPE = 5,
  KSR_E_IO = 6,
  KSR_E_FORMAT = 7,
  KSR_E_CONFIG = 8,
  KSR_E_BOUND_EXCEEDED = 9,
  KSR_E_MISSING_ENTRY = 10,
  KSR_E_DUPLICATE_ENTRY = 11,
  KSR_E_NON_FINITE = 12,
  KSR_E_DEGENERATE = 13,
  KSR_E_NUMERICAL = 14,
  KSR_E_INTERNAL = 99
} ksr_status;

typedef struct ksr_image ksr_image;
typedef struct ksr_cube ksr_cube;
typedef struct ksr_keystone ksr_keystone;

KSR_API const char* ksr_version(void);
/* Message of the last failing call on this thread; empty after a success. */
KSR_API const char* ksr_last_error(void);
KSR_API const char* ksr_status_name(ksr_status status);

/* Images: row-major doubles. `data` may be NULL for a zero image. */
KSR_API ksr_status ksr_image_create(int rows, int cols, const double* data, ksr_image** out);
KSR_API void ksr_image_destroy(ksr_image* img);
KSR_API int ksr_image_rows(const ksr_image* img);
KSR_API int ksr_image_cols(const ksr_image* img);
KSR_API const double* ksr_image_data(const ksr_image* img);

/* Cubes: band-sequential doubles, bands x rows x cols. */
KSR_API ksr_status ksr_cube_create(int n_bands, int rows, int cols, const double* data, ksr_cube** out);
KSR_API ksr_status ksr_cube_load(const char* header_path, ksr_cube** out);
KSR_API ksr_status ksr_cube_save(const ksr_cube* cube, const char* header_path);
KSR_API void ksr_cube_destroy(ksr_cube* cube);
KSR_API int ksr_cube_bands(const ksr_cube* cube);
KSR_API int ksr_cube_rows(const ksr_cube* cube);
KSR_API int ksr_cube_cols(const ksr_cube* cube);
KSR_API ksr_status ksr_cube_band(const ksr_cube* cube, int band, ksr_image** out);

/* Keystone tables; reference_band < 0 infers it. */
KSR_API ksr_status ksr_keystone_load(const char* path, int n_bands, int n_cols, int reference_band, ksr_keystone** out);
KSR_API ksr_status ksr_keystone_identity(int n_bands, int n_cols, int reference_band, ksr_keystone** out);
KSR_API void ksr_keystone_destroy(ksr_keystone* ks);
KSR_API int ksr_keystone_reference(const ksr_keystone* ks);
KSR_API ksr_status ksr_keystone_shift(const ksr_keystone* ks, int band, int col, double* dx, double* dy);

/* Metrics. */
KSR_API ksr_status ksr_psnr(const ksr_image* a, const ksr_image* b, double peak, double* out_db);
KSR_API ksr_status ksr_band_power(const ksr_image* img, double f_lo, double f_hi, double* out);
KSR_API ksr_status ksr_mean_spectral_angle(const ksr_cube* a, const ksr_cube* b, double* out_deg);

/* Super-resolution of a cube into a pseudo-panchromatic image. */
typedef enum ksr_fidelity { KSR_FIDELITY_L2 = 0, KSR_FIDELITY_L1 = 1 } ksr_fidelity;
typedef enum ksr_prior { KSR_PRIOR_RBTV = 0, KSR_PRIOR_BTV = 1, KSR_PRIOR_TV = 2 } ksr_prior;

typedef struct ksr_solver_params {
  double lambda;
  double beta0;
  double alpha;
  int P;
  int scale;
  int max_iters;
  ksr_fidelity fidelity;
  ksr_prior prior;
  double rate_up;
  double rate_down;
  double conv_tol;
  int conv_patience;
  int rmap_window;
  int paper_literal;
  int threads;
} ksr_solver_params;

typedef struct ksr_solve_info {
  int iterations;
  int converged;
  double initial_cost;
  double final_cost;
} ksr_solve_info;

KSR_API void ksr_solver_params_default(ksr_solver_params* params);
/* `psf_recipe` such as "rect:2"; `floor` clamps the cube before coefficient estimation.
   `bicubic` and `info` may be NULL. */
KSR_API ksr_status ksr_super_resolve(const ksr_cube* cube, const ksr_keystone* keystone, const char* psf_recipe,
                                     const ksr_solver_params* params, double floor, ksr_image** pan,
                                     ksr_image** bicubic, ksr_solve_info* info);
/* SFIM fusion of every band with `pan`; `keystone` may be NULL to skip registration. */
KSR_API ksr_status ksr_fuse(const ksr_cube* cube, const ksr_image* pan, int scale, const char* psf_recipe,
                            const ksr_keystone* keystone, ksr_cube** out);

/* Config-driven commands mirroring the command-line tool. */
typedef struct ksr_run_options {
  const char* config_path;
  const char* output_dir; /* NULL or empty: from the config */
  int skip_restore;
  int paper_literal;
  int has_seed;
  uint64_t seed;
} ksr_run_options;

typedef struct ksr_run_summary {
  int iterations;
  int converged;
  double initial_cost;
  double final_cost;
  double mean_sam_deg;
  int has_psnr;
  double psnr_pan_db;
  double psnr_bicubic_db;
} ksr_run_summary;

KSR_API void ksr_run_options_init(ksr_run_options* opts);
KSR_API ksr_status ksr_cmd_synth(const ksr_run_options* opts);
KSR_API ksr_status ksr_cmd_run(const ksr_run_options* opts, ksr_run_summary* summary);
KSR_API ksr_status ksr_cmd_compare(const ksr_run_options* opts);

#ifdef __cplusplus
}
#endif

#endif

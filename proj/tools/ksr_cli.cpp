// Licensed under the Apache License 2.0 (see LICENSE file).
#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "ksr/ksr.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kData = 3, kNumerical = 4, kInternal = 5 };

int exit_code(ksr_status s) {
  switch (s) {
    case KSR_OK: return kOk;
    case KSR_E_CONFIG:
    case KSR_E_INVALID_ARGUMENT: return kConfig;
    case KSR_E_NON_FINITE:
    case KSR_E_DEGENERATE:
    case KSR_E_NUMERICAL: return kNumerical;
    case KSR_E_INTERNAL: return kInternal;
    default: return kData;
  }
}

struct Flags {
  std::string config;
  std::string output_dir;
  bool skip_restore = false;
  bool paper_literal = false;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, Flags& f, bool solver_flags) {
  cmd->add_option("-c,--config", f.config, "Config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--output-dir", f.output_dir, "Output directory (overrides [output] dir)");
  f.seed_opt = cmd->add_option("--seed", f.seed, "Random seed override");
  if (solver_flags) {
    cmd->add_flag("--skip-restore", f.skip_restore, "Skip per-band restoration");
    cmd->add_flag("--paper-literal", f.paper_literal, "Keep every step; only adapt the learning rate");
  }
}

ksr_run_options options(const Flags& f) {
  ksr_run_options o;
  ksr_run_options_init(&o);
  o.config_path = f.config.c_str();
  o.output_dir = f.output_dir.empty() ? nullptr : f.output_dir.c_str();
  o.skip_restore = f.skip_restore;
  o.paper_literal = f.paper_literal;
  o.has_seed = f.seed_opt && f.seed_opt->count() > 0;
  o.seed = f.seed;
  return o;
}

int report(ksr_status s) {
  if (s != KSR_OK) std::fprintf(stderr, "error (%s): %s\n", ksr_status_name(s), ksr_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keystone-aware hyperspectral super-resolution"};
  app.set_version_flag("--version", std::string(ksr_version()));
  app.require_subcommand(1);

  Flags synth_f, run_f, compare_f;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic acquisition");
  add_common(synth, synth_f, false);
  auto* run = app.add_subcommand("run", "Restore, super-resolve, fuse and evaluate");
  add_common(run, run_f, true);
  auto* compare = app.add_subcommand("compare", "Compare fidelity/prior combinations");
  add_common(compare, compare_f, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (synth->parsed()) {
    const auto o = options(synth_f);
    return report(ksr_cmd_synth(&o));
  }
  if (run->parsed()) {
    const auto o = options(run_f);
    ksr_run_summary s{};
    const ksr_status st = ksr_cmd_run(&o, &s);
    if (st == KSR_OK) {
      std::printf("iterations %d%s, cost %.6g -> %.6g, mean spectral angle %.4f deg\n", s.iterations,
                  s.converged ? " (converged)" : "", s.initial_cost, s.final_cost, s.mean_sam_deg);
      if (s.has_psnr) std::printf("PSNR pan %.3f dB, bicubic %.3f dB\n", s.psnr_pan_db, s.psnr_bicubic_db);
    }
    return report(st);
  }
  const auto o = options(compare_f);
  return report(ksr_cmd_compare(&o));
}

// Licensed under the Apache License 2.0 (see LICENSE file).
#include <doctest.h>

#include <filesystem>
#include <functional>
#include <optional>

#include "pipeline.hpp"
#include "test_util.hpp"

using namespace ksr;
using namespace ksr_test;
namespace fs = std::filesystem;

namespace {

const char* kScene =
    "[scene]\n"
    "hr_rows = 32\n"
    "hr_cols = 32\n"
    "n_bands = 4\n";

std::string make_dataset(const std::string& name, const std::string& scene = kScene) {
  const std::string dir = scratch_dir(name);
  write_file(dir + "/scene.cfg", scene);
  CommandOptions o;
  o.config_path = dir + "/scene.cfg";
  o.output_dir = dir + "/data";
  cmd_synth(o);
  return dir;
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

CommandOptions run_options(const std::string& cfg, const std::string& out) {
  CommandOptions o;
  o.config_path = cfg;
  o.output_dir = out;
  return o;
}

}  // namespace

TEST_CASE("synth writes a reproducible dataset") {
  const std::string dir = make_dataset("synth_a");
  for (const char* f : {"cube.hdr", "cube.img", "clean.hdr", "truth.hdr", "coeffs.hdr", "keystone.csv", "noise.csv",
                        "run.cfg", "manifest.txt"})
    CHECK(fs::exists(dir + "/data/" + f));
  const HyperCube cube = load_cube(dir + "/data/cube.hdr");
  CHECK(cube.n_bands() == 4);
  CHECK(cube.rows() == 16);

  CommandOptions again = run_options(dir + "/scene.cfg", dir + "/again");
  cmd_synth(again);
  for (const char* f : {"cube.img", "truth.img", "keystone.csv", "manifest.txt"})
    CHECK(read_file(dir + "/data/" + f) == read_file(dir + "/again/" + f));

  again.output_dir = dir + "/seeded";
  again.seed = 99;
  cmd_synth(again);
  CHECK(read_file(dir + "/data/cube.img") != read_file(dir + "/seeded/cube.img"));
  CHECK(read_file(dir + "/seeded/manifest.txt").find("seed = 99") != std::string::npos);
}

TEST_CASE("synth rejects inconsistent scenes") {
  const std::string dir = scratch_dir("synth_bad");
  write_file(dir + "/bad.cfg", "[scene]\nhr_rows = 64\nhr_cols = 64\nscale = 3\n");
  CHECK(code_of([&] { cmd_synth(run_options(dir + "/bad.cfg", dir + "/o")); }) == ErrorCode::config);
  write_file(dir + "/key.cfg", "[scene]\nhr_rowz = 64\n");
  CHECK(code_of([&] { cmd_synth(run_options(dir + "/key.cfg", dir + "/o")); }) == ErrorCode::config);
  write_file(dir + "/sec.cfg", "[scenery]\nhr_rows = 64\n");
  CHECK(code_of([&] { cmd_synth(run_options(dir + "/sec.cfg", dir + "/o")); }) == ErrorCode::config);
  write_file(dir + "/val.cfg", "[scene]\nhr_rows = many\n");
  try {
    cmd_synth(run_options(dir + "/val.cfg", dir + "/o"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("val.cfg:2") != std::string::npos);
  }
  CHECK(code_of([&] { cmd_synth(run_options(dir + "/missing.cfg", dir + "/o")); }) == ErrorCode::config);
}

TEST_CASE("run emits every product") {
  const std::string dir = make_dataset("run_a");
  const RunSummary s = cmd_run(run_options(dir + "/data/run.cfg", dir + "/run"));
  for (const char* f : {"restored.hdr", "pan.hdr", "bicubic.hdr", "fused.hdr", "trace.csv", "spectrum.csv", "metrics.csv",
                        "manifest.txt"})
    CHECK(fs::exists(dir + "/run/" + f));
  CHECK(s.iterations >= 1);
  CHECK(s.iterations <= 30);
  CHECK(s.final_cost < s.initial_cost);
  REQUIRE(s.psnr_pan.has_value());
  CHECK(*s.psnr_pan > *s.psnr_bicubic);
  CHECK(s.mean_sam_deg < 2.0);

  const HyperCube fused = load_cube(dir + "/run/fused.hdr");
  CHECK(fused.n_bands() == 4);
  CHECK(fused.rows() == 32);
  CHECK(load_cube(dir + "/run/pan.hdr").n_bands() == 1);

  const std::string manifest = read_file(dir + "/run/manifest.txt");
  for (const char* line : {"lambda = 0.015", "beta0 = 0.8", "alpha = 0.2", "P = 4", "max_iters = 30", "fidelity = L2",
                           "prior = RBTV", "rate_up = 1.05", "rate_down = 0.95", "conv_tol = 0.01", "conv_patience = 3",
                           "cube_sha256 = "})
    CHECK_MESSAGE(manifest.find(line) != std::string::npos, line);
  CHECK(read_file(dir + "/run/trace.csv").find("iteration,") == 0);
  CHECK(read_file(dir + "/run/metrics.csv").find("metric,value\n") == 0);

  cmd_run(run_options(dir + "/data/run.cfg", dir + "/run2"));
  for (const char* f : {"pan.img", "fused.img", "trace.csv", "metrics.csv", "manifest.txt"})
    CHECK(read_file(dir + "/run/" + f) == read_file(dir + "/run2/" + f));
}

TEST_CASE("skipping restoration matches disabling it") {
  const std::string dir = make_dataset("run_skip", "[scene]\nhr_rows = 128\nhr_cols = 128\nn_bands = 3\nlr_blur_sigma = 1.0\n");
  CHECK(read_file(dir + "/data/run.cfg").find("enabled = true") != std::string::npos);
  const std::string data = dir + "/data/";
  std::string off = read_file(data + "run.cfg");
  off.replace(off.find("enabled = true"), 14, "enabled = false");
  write_file(data + "off.cfg", off);

  CommandOptions skip = run_options(data + "run.cfg", dir + "/skip");
  skip.skip_restore = true;
  cmd_run(skip);
  cmd_run(run_options(data + "off.cfg", dir + "/off"));
  CHECK(read_file(dir + "/skip/pan.img") == read_file(dir + "/off/pan.img"));

  cmd_run(run_options(data + "run.cfg", dir + "/on"));
  CHECK(fs::exists(dir + "/on/kernels/band_000.csv"));
  CHECK(read_file(dir + "/on/pan.img") != read_file(dir + "/off/pan.img"));
}

TEST_CASE("run validates its inputs") {
  const std::string dir = make_dataset("run_bad");
  const std::string data = dir + "/data/";
  write_file(data + "nocube.cfg", "[input]\ncube = nothere.hdr\n");
  CHECK(code_of([&] { cmd_run(run_options(data + "nocube.cfg", dir + "/o")); }) == ErrorCode::missing_file);
  write_file(data + "noinput.cfg", "[solver]\nlambda = 0.01\n");
  CHECK(code_of([&] { cmd_run(run_options(data + "noinput.cfg", dir + "/o")); }) == ErrorCode::config);
  write_file(data + "lambda.cfg", read_file(data + "run.cfg") + "lambda = -1\n");
  CHECK(code_of([&] { cmd_run(run_options(data + "lambda.cfg", dir + "/o")); }) == ErrorCode::config);
}

TEST_CASE("compare") {
  const std::string dir = make_dataset("compare");
  const std::string data = dir + "/data/";
  write_file(data + "one.cfg", read_file(data + "run.cfg") + "max_iters = 5\n[compare]\nmethods = L1+TV\n");
  cmd_compare(run_options(data + "one.cfg", dir + "/one"));
  const std::string csv = read_file(dir + "/one/compare.csv");
  CHECK(csv.find("method,psnr_db,hf_power") == 0);
  CHECK(csv.find("\nbicubic,") != std::string::npos);
  CHECK(csv.find("\nL1+TV,") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(fs::exists(dir + "/one/compare_spectra.csv"));
  CHECK(fs::exists(dir + "/one/compare_spectra.svg"));

  cmd_compare(run_options(data + "one.cfg", dir + "/two"));
  CHECK(read_file(dir + "/one/compare.csv") == read_file(dir + "/two/compare.csv"));

  write_file(data + "badm.cfg", read_file(data + "run.cfg") + "[compare]\nmethods = L2+XYZ\n");
  CHECK(code_of([&] { cmd_compare(run_options(data + "badm.cfg", dir + "/o")); }) == ErrorCode::config);
}

TEST_CASE("sha256") {
  const std::string dir = scratch_dir("sha");
  write_file(dir + "/abc.txt", "abc");
  CHECK(sha256_file(dir + "/abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS(sha256_file(dir + "/none"), Error);
}

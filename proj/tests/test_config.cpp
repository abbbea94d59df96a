// Licensed under the Apache License 2.0 (see LICENSE file).
#include <doctest.h>

#include <algorithm>
#include <functional>

#include "config.hpp"
#include "raster.hpp"

using namespace ksr;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_CASE("sections, comments and typed getters") {
  const Config c = Config::parse(
      "# header comment\n"
      "top = 1\n"
      "[solver]\n"
      "lambda = 0.015   ; trailing comment\n"
      "max_iters = 30\n"
      "paper_literal = yes\n"
      "methods = L2+RBTV, L1+TV ,\n"
      "\n"
      "[scene]\n"
      "phantom = texture\n",
      "t.cfg");
  CHECK(c.get_int("top", 0) == 1);
  CHECK(c.get_double("solver.lambda", 0.0) == 0.015);
  CHECK(c.get_int("solver.max_iters", 0) == 30);
  CHECK(c.get_bool("solver.paper_literal", false));
  CHECK(c.get_list("solver.methods", {}) == std::vector<std::string>{"L2+RBTV", "L1+TV"});
  CHECK(c.get_string("scene.phantom", "") == "texture");
  CHECK(c.get_string("scene.missing", "fallback") == "fallback");
  auto s = c.sections();
  std::sort(s.begin(), s.end());
  CHECK(s == std::vector<std::string>{"", "scene", "solver"});
}

TEST_CASE("errors carry file and line") {
  CHECK(message_of([] { Config::parse("[a]\nx = 1\nx = 2\n", "f.cfg"); }).find("f.cfg:3") != std::string::npos);
  CHECK(message_of([] { Config::parse("[a\n", "f.cfg"); }).find("f.cfg:1") != std::string::npos);
  CHECK(message_of([] { Config::parse("[a]\njunk\n", "f.cfg"); }).find("f.cfg:2") != std::string::npos);

  const Config c = Config::parse("[s]\n\nn = 3.5\nb = maybe\nd = abc\nextra = 1\n", "g.cfg");
  CHECK(message_of([&] { c.get_int("s.n", 0); }).find("g.cfg:3: s.n") != std::string::npos);
  CHECK(message_of([&] { c.get_bool("s.b", false); }).find("g.cfg:4") != std::string::npos);
  CHECK(message_of([&] { c.get_double("s.d", 0.0); }).find("g.cfg:5") != std::string::npos);
  CHECK(message_of([&] { c.require_known("s", {"n", "b", "d"}); }).find("g.cfg:6: s.extra: unknown key") !=
        std::string::npos);
  CHECK(message_of([&] { c.fail("s.b", "bad"); }) == "g.cfg:4: s.b: bad");
}

TEST_CASE("missing config file is a config error") {
  message_of([] { Config::load("/nonexistent/dir/x.cfg"); });
}

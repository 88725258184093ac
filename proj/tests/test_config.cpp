#include "doctest.h"
#include "pam/config.hpp"
#include "pam/manifest.hpp"

using namespace pam;

TEST_CASE("key-value parsing, defaults, round trip") {
  auto cfg = KeyValueConfig::parse(
      "# comment\n"
      "kappa = 0.4\n"
      "epsilon = 0.55\n"
      "lattice.n = 16\n");
  RunConfig rc = RunConfig::from_config(cfg);
  CHECK(rc.model.d == 3);
  CHECK(rc.model.alpha == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(rc.lattice.n == 16);
  CHECK(rc.dt == doctest::Approx(std::min(0.25 * 0.25, 0.55 * 0.55) / 4.0));

  // resolved defaults echo back and the render round-trips
  rc.echo_into(cfg);
  const std::string text = cfg.render();
  auto cfg2 = KeyValueConfig::parse(text);
  RunConfig rc2 = RunConfig::from_config(cfg2);
  CHECK(rc2.model.kappa == rc.model.kappa);
  CHECK(rc2.dt == rc.dt);
  CHECK(rc2.lattice.box_length == rc.lattice.box_length);
  CHECK(cfg2.render() == text);
}

TEST_CASE("constraint violations name the constraint") {
  auto cfg = KeyValueConfig::parse("kappa = 0.6\nepsilon = 0.6\n");
  CHECK_THROWS_WITH_AS(RunConfig::from_config(cfg),
                       doctest::Contains("0 <= kappa < (d-2)/2"),
                       std::invalid_argument);

  auto cfg2 = KeyValueConfig::parse(
      "kappa = 0.4\nepsilon = 0.1\nlattice.n = 16\n");  // cell 0.25 >= eps/2
  CHECK_THROWS_WITH_AS(RunConfig::from_config(cfg2),
                       doctest::Contains("resolve the mollifier"),
                       std::invalid_argument);

  auto cfg3 = KeyValueConfig::parse(
      "kappa = 0.4\nepsilon = 0.55\nlattice.n = 16\ndt = 0.05\n");
  CHECK_THROWS_WITH_AS(RunConfig::from_config(cfg3),
                       doctest::Contains("dt <= cell^2/2"),
                       std::invalid_argument);
}

TEST_CASE("unknown keys are rejected, never ignored") {
  auto cfg = KeyValueConfig::parse(
      "kappa = 0.4\nepsilon = 0.55\nlattice.n = 16\nmystery_key = 3\n");
  RunConfig::from_config(cfg);
  CHECK_THROWS_WITH_AS(cfg.ensure_all_consumed(),
                       doctest::Contains("mystery_key"),
                       std::invalid_argument);

  CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(KeyValueConfig::parse("not a key value line\n"),
                  std::invalid_argument);
}

TEST_CASE("full-precision formatting round-trips doubles") {
  for (double v : {1.0 / 3.0, 0.1, 6.02214076e23, 1.25e-17}) {
    const std::string s = format_full(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("fnv checksums are stable") {
  CHECK(fnv1a_hash(std::string("")) == 0xcbf29ce484222325ull);
  CHECK(fnv1a_hash(std::string("a")) == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a_hash(std::string("foobar")) == 0x85944171f73967e8ull);
}

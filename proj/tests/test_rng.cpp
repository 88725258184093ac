#include <cstdint>
#include <vector>

#include "doctest.h"
#include "pam/rng.hpp"
#include "pam/stats.hpp"

using namespace pam;

TEST_CASE("philox 4x32-10 known answers") {
  // reference vectors from the original counter-based RNG publication
  auto r0 = Philox::block({0u, 0u, 0u, 0u}, {0u, 0u});
  CHECK(r0[0] == 0x6627e8d5u);
  CHECK(r0[1] == 0xe169c58du);
  CHECK(r0[2] == 0xbc57ac4cu);
  CHECK(r0[3] == 0x9b00dbd8u);

  auto r1 = Philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu});
  CHECK(r1[0] == 0x408f276du);
  CHECK(r1[1] == 0x41c83b0eu);
  CHECK(r1[2] == 0xa20bc7c6u);
  CHECK(r1[3] == 0x6d5451fdu);

  auto r2 = Philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u});
  CHECK(r2[0] == 0xd16cfe09u);
  CHECK(r2[1] == 0x94fdccebu);
  CHECK(r2[2] == 0x5001e420u);
  CHECK(r2[3] == 0x24126ea1u);
}

TEST_CASE("substreams reproduce independently of draw order") {
  Philox a(42, 7, 1000);
  std::vector<double> first;
  for (int i = 0; i < 100; ++i) first.push_back(a.next_double());

  // interleave other streams, then redraw stream (7,1000)
  Philox b(42, 7, 999), c(42, 8, 1000), d(42, 7, 1000);
  (void)b.next_u64();
  (void)c.next_u64();
  for (int i = 0; i < 100; ++i) CHECK(d.next_double() == first[i]);
}

TEST_CASE("normals have the right first moments") {
  Philox g(1234, 1, 0);
  const int n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = g.next_normal();
  auto est = reduce_samples(xs);
  CHECK(std::abs(est.mean) < 4.0 * est.std_error);
  double m2 = 0;
  for (double x : xs) m2 += x * x;
  m2 /= n;
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sample_kurtosis(xs) == doctest::Approx(3.0).epsilon(0.05));
}

#include "qfilt/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace qfilt;

TEST_CASE("Philox4x32-10 known answers") {
  // Published test vectors of the Random123 distribution.
  {
    const PhiloxCounter out = philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(out == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  }
  {
    const PhiloxCounter out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                            {0xffffffffu, 0xffffffffu});
    CHECK(out == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  }
  {
    const PhiloxCounter out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                            {0xa4093822u, 0x299f31d0u});
    CHECK(out == PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  }
}

TEST_CASE("streams are reproducible and distinct") {
  PhiloxStream a(7, StreamId::wiener, 3), b(7, StreamId::wiener, 3);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  std::set<std::uint32_t> firsts;
  for (std::uint64_t idx = 0; idx < 64; ++idx) firsts.insert(PhiloxStream(7, StreamId::wiener, idx)());
  for (std::uint32_t s = 1; s < 6; ++s) firsts.insert(PhiloxStream(7, s, 0)());
  CHECK(firsts.size() == 64 + 4);
  CHECK(PhiloxStream(7, StreamId::wiener, 0)() != PhiloxStream(8, StreamId::wiener, 0)());
}

TEST_CASE("distribution moments") {
  PhiloxStream rng(11, StreamId::generic, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    se += rng.exponential(4.0);
  }
  // 5 sigma bounds
  CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sn / n) < 5 / std::sqrt(n));
  CHECK(std::abs(sn2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
  CHECK(std::abs(se / n - 0.25) < 5 * 0.25 / std::sqrt(n));
}

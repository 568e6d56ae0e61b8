#include "doctest.h"

#include <cstdint>
#include <set>

#include "dpre/philox.hpp"

using dpre::Philox4;
using dpre::philox4x32_10;
using dpre::splitmix64;

namespace {

bool equals(const Philox4& a, uint32_t e0, uint32_t e1, uint32_t e2, uint32_t e3) {
  return a.x[0] == e0 && a.x[1] == e1 && a.x[2] == e2 && a.x[3] == e3;
}

}  // namespace

TEST_CASE("counter generator reproduces the published test vectors") {
  // Known-answer vectors for the 10-round 4x32 configuration, checked
  // against an independent reference implementation.
  Philox4 zeros = philox4x32_10({{0u, 0u, 0u, 0u}}, 0u, 0u);
  CHECK(equals(zeros, 0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u));

  Philox4 ones = philox4x32_10({{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}},
                               0xffffffffu, 0xffffffffu);
  CHECK(equals(ones, 0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu));

  Philox4 pi = philox4x32_10({{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}},
                             0xa4093822u, 0x299f31d0u);
  CHECK(equals(pi, 0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u));
}

TEST_CASE("every counter word and every key word matters") {
  const Philox4 base = philox4x32_10({{1u, 2u, 3u, 4u}}, 5u, 6u);
  for (int i = 0; i < 4; ++i) {
    Philox4 ctr{{1u, 2u, 3u, 4u}};
    ctr.x[i] ^= 0x80000000u;
    const Philox4 out = philox4x32_10(ctr, 5u, 6u);
    CHECK_FALSE(equals(out, base.x[0], base.x[1], base.x[2], base.x[3]));
  }
  const Philox4 k0 = philox4x32_10({{1u, 2u, 3u, 4u}}, 5u ^ 0x10000u, 6u);
  const Philox4 k1 = philox4x32_10({{1u, 2u, 3u, 4u}}, 5u, 6u ^ 0x10000u);
  CHECK_FALSE(equals(k0, base.x[0], base.x[1], base.x[2], base.x[3]));
  CHECK_FALSE(equals(k1, base.x[0], base.x[1], base.x[2], base.x[3]));
}

TEST_CASE("nearby counters do not collide") {
  std::set<uint64_t> seen;
  for (uint32_t n = 0; n < 64; ++n) {
    for (uint32_t u = 0; u < 64; ++u) {
      const Philox4 out = philox4x32_10({{n, u, 0u, 0u}}, 0xdeadbeefu, 0xcafef00du);
      seen.insert((uint64_t(out.x[0]) << 32) | out.x[1]);
    }
  }
  CHECK(seen.size() == 64u * 64u);
}

TEST_CASE("seed finalizer matches the reference stream") {
  // First output of the reference sequence seeded at zero, plus one
  // arbitrary probe, both checked against an independent implementation.
  CHECK(splitmix64(0u) == 0xE220A8397B1DCDAFull);
  CHECK(splitmix64(1234567u) == 0x599ED017FB08FC85ull);
  CHECK(splitmix64(42u) != splitmix64(43u));
}

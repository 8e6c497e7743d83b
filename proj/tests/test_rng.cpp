#include <catch_amalgamated.hpp>

#include <set>

#include "nashtrack/rng.hpp"

using nashtrack::Philox4x32;

// Known-answer vectors published with the Random123 reference implementation.
TEST_CASE("philox matches the reference known answers", "[rng]") {
  using Block = Philox4x32::Block;
  CHECK(Philox4x32::bijection({0, 0, 0, 0}, {0, 0}) ==
        Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::bijection({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              {0xffffffffu, 0xffffffffu}) ==
        Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::bijection({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u}) ==
        Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and separated by substream", "[rng]") {
  Philox4x32 a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::vector<std::uint32_t> xa, xb, xc, xd;
  for (int i = 0; i < 64; ++i) {
    xa.push_back(a());
    xb.push_back(b());
    xc.push_back(c());
    xd.push_back(d());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);
}

TEST_CASE("uniform draws lie in [0, 1) with the right mean", "[rng]") {
  Philox4x32 rng(1, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == Catch::Approx(0.5).margin(0.005));
}

TEST_CASE("substream ids do not collide across purposes", "[rng]") {
  std::set<std::uint64_t> ids;
  for (std::uint64_t t = 0; t < 16; ++t)
    for (std::uint64_t p = 0; p < 4; ++p)
      for (std::uint64_t i = 0; i < 16; ++i) ids.insert(nashtrack::substream_id(t, p, i));
  CHECK(ids.size() == 16u * 4u * 16u);
}

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace nashtrack {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
//
// The 64-bit key holds the master seed; the upper two counter words hold a
// substream id and the lower two the position inside that substream. Any
// (seed, substream) pair therefore yields an independent, reproducible
// sequence regardless of how work is scheduled across threads.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32() = default;
  Philox4x32(std::uint64_t seed, std::uint64_t substream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        substream_(substream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      buf_ = bijection(
          {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
           static_cast<std::uint32_t>(substream_), static_cast<std::uint32_t>(substream_ >> 32)},
          key_);
      ++counter_;
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  std::uint64_t substream() const { return substream_; }

  static Block bijection(Block ctr, Key key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  Key key_{0, 0};
  std::uint64_t substream_ = 0;
  std::uint64_t counter_ = 0;
  Block buf_{};
  int pos_ = 4;
};

using RandomStream = Philox4x32;

// Stable substream id for a (trial, purpose, index) triple.
constexpr std::uint64_t substream_id(std::uint64_t trial, std::uint64_t purpose, std::uint64_t index) {
  return (trial << 40) ^ (purpose << 32) ^ index;
}

}  // namespace nashtrack

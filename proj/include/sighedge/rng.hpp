#pragma once

// Counter-based normal generator: Philox4x32-10 keyed by the run seed, with
// the path index in the counter, so every path owns an independent stream
// regardless of how paths are distributed over workers.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sighedge {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  Block operator()(std::uint64_t position) const {
    Block ctr{static_cast<std::uint32_t>(position), static_cast<std::uint32_t>(position >> 32),
              static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9U;
        key[1] += 0xBB67AE85U;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53U} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57U} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
};

class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream) : gen_(seed, stream) {}

  double operator()() {
    if (cached_) {
      cached_ = false;
      return spare_;
    }
    const auto b = gen_(position_++);
    // 53-bit uniforms in (0, 1].
    const double u1 = (static_cast<double>((std::uint64_t{b[0]} << 21) ^ (b[1] >> 11)) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>((std::uint64_t{b[2]} << 21) ^ (b[3] >> 11)) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    cached_ = true;
    return r * std::cos(a);
  }

 private:
  Philox4x32 gen_;
  std::uint64_t position_ = 0;
  double spare_ = 0.0;
  bool cached_ = false;
};

}  // namespace sighedge

#pragma once

// Counter-based Philox4x32-10. A draw is a pure function of (key, counter),
// so every replica, step, particle and coordinate owns its own stream.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace chaoslab {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}
  explicit Philox4x32(Key key) : key_(key) {}

  Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += kW0;
        k[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
  Key key_;
};

/// Uniform double in (0, 1) from two 32-bit words (53 random bits).
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return (static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1.0p-53;
}

/// Stream tags packed into the top byte of the last counter word.
enum class StreamTag : std::uint32_t { noise = 0, initial = 1, auxiliary = 2 };

/// Noise source keyed by seed. One block yields two uniforms or two normals.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : philox_(seed) {}

  Philox4x32::Counter block(std::uint32_t replica, std::uint32_t step, std::uint32_t particle,
                            std::uint32_t lane, StreamTag tag) const {
    return philox_({replica, step, particle, (lane & 0xFFFFFFu) |
                                                 (static_cast<std::uint32_t>(tag) << 24)});
  }

  std::array<double, 2> uniforms(std::uint32_t replica, std::uint32_t step, std::uint32_t particle,
                                 std::uint32_t lane, StreamTag tag) const {
    const auto b = block(replica, step, particle, lane, tag);
    return {uniform_open(b[0], b[1]), uniform_open(b[2], b[3])};
  }

  /// Box-Muller pair of standard normals.
  std::array<double, 2> normals(std::uint32_t replica, std::uint32_t step, std::uint32_t particle,
                                std::uint32_t lane, StreamTag tag = StreamTag::noise) const {
    const auto u = uniforms(replica, step, particle, lane, tag);
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double a = 2.0 * std::numbers::pi * u[1];
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  Philox4x32 philox_;
};

}  // namespace chaoslab

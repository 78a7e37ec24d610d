#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace vsseg {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Chosen so
// that augmentation streams are reproducible across languages: the key is the
// user seed, the high counter word selects an independent stream, and the low
// counter word addresses 128-bit blocks within the stream. Documented draw
// orders live next to each consumer.
class Philox4x32 {
 public:
  Philox4x32(std::uint64_t key, std::uint64_t stream) : key_(key), stream_(stream) {}

  std::array<std::uint32_t, 4> block(std::uint64_t index) const {
    std::uint32_t c0 = static_cast<std::uint32_t>(index);
    std::uint32_t c1 = static_cast<std::uint32_t>(index >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(key_);
    std::uint32_t k1 = static_cast<std::uint32_t>(key_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0;
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return {c0, c1, c2, c3};
  }

  // 53-bit uniform in [0, 1) from words (2i, 2i+1) of the stream.
  double uniform_at(std::uint64_t draw_index) const {
    const auto b = block(draw_index / 2);
    const int off = static_cast<int>(draw_index % 2) * 2;
    const std::uint64_t bits =
        (std::uint64_t{b[off]} << 32) | std::uint64_t{b[off + 1]};
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  double uniform_at(std::uint64_t draw_index, double lo, double hi) const {
    return lo + uniform_at(draw_index) * (hi - lo);
  }

  // One standard normal per block: Box-Muller on the block's two uniforms.
  double normal_at(std::uint64_t block_index) const {
    const auto b = block(block_index);
    const std::uint64_t bits0 = (std::uint64_t{b[0]} << 32) | std::uint64_t{b[1]};
    const std::uint64_t bits1 = (std::uint64_t{b[2]} << 32) | std::uint64_t{b[3]};
    const double u1 = (static_cast<double>(bits0 >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(bits1 >> 11) * 0x1.0p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Derives a child seed, used to split one seed across dataset items.
  static std::uint64_t split(std::uint64_t seed, std::uint64_t item) {
    const auto b = Philox4x32(seed, kSplitStream).block(item);
    return (std::uint64_t{b[0]} << 32) | std::uint64_t{b[1]};
  }

  static constexpr std::uint64_t kParamStream = 0;
  static constexpr std::uint64_t kNoiseStream = 1;
  static constexpr std::uint64_t kSplitStream = 2;

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
};

}  // namespace vsseg

// Counter-based random streams.
//
// Philox4x32-10 (Salmon et al., SC'11) maps a 128-bit counter and a 64-bit
// key to 128 random bits. A stream is identified by (seed, stream id): the
// seed is the key, the stream id fills the upper 64 counter bits and the
// lower 64 bits count blocks. Any (seed, stream id) pair can therefore be
// regenerated independently of every other stream, which is what lets
// trials and Monte Carlo samples run in any order on any number of workers.
//
// Uniform doubles take 53 bits from two words. Standard normals use the
// Marsaglia polar rejection method, which only needs log and sqrt.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace gmmssl {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Packs a two-level stream address (e.g. trial index and purpose) into a
/// stream id.
constexpr std::uint64_t stream_id(std::uint32_t major, std::uint32_t minor) {
  return (static_cast<std::uint64_t>(major) << 32) | minor;
}

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

  /// Fair coin as +1 / -1.
  int sign() { return (next_u32() & 1u) ? 1 : -1; }

 private:
  void refill() {
    const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(block_),
                                     static_cast<std::uint32_t>(block_ >> 32),
                                     static_cast<std::uint32_t>(stream_),
                                     static_cast<std::uint32_t>(stream_ >> 32)};
    buffer_ = Philox4x32::block(ctr, key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gmmssl

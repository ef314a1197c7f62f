#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace mlmcuq {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block is a
/// pure function of (counter, key), so any stream position can be computed
/// independently of every other.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
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

/// Address of an independent random stream: (level, replicate, sample).
/// The `tag` word separates unrelated consumers sharing one seed (pilot runs,
/// reference computations, ...).
struct StreamKey {
  std::uint32_t level = 0;
  std::uint32_t replicate = 0;
  std::uint32_t sample = 0;
  std::uint32_t tag = 0;
};

/// Sequential view over one Philox stream. Cheap to construct; never shared
/// between threads, each worker builds its own from the index it owns.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamKey key) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(key) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    if (cursor_ == 4) refill();
    const std::uint64_t hi = buffer_[cursor_];
    const std::uint64_t lo = buffer_[cursor_ + 1];
    cursor_ += 2;
    return unit(hi, lo);
  }

  /// Uniform double in [-1, 1).
  double uniform_symmetric() noexcept { return 2.0 * uniform01() - 1.0; }

  /// Same values as repeated uniform_symmetric(), two per block without the
  /// per-draw buffer bookkeeping.
  void fill_symmetric(double* out, std::size_t n) noexcept {
    std::size_t i = 0;
    while (i < n && cursor_ != 4) out[i++] = uniform_symmetric();
    for (; i + 2 <= n; i += 2) {
      refill();
      out[i] = symmetric(buffer_[0], buffer_[1]);
      out[i + 1] = symmetric(buffer_[2], buffer_[3]);
      cursor_ = 4;
    }
    if (i < n) out[i] = uniform_symmetric();
  }

 private:
  static double unit(std::uint64_t hi, std::uint64_t lo) noexcept {
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }
  static double symmetric(std::uint64_t hi, std::uint64_t lo) noexcept {
    return 2.0 * unit(hi, lo) - 1.0;
  }

  void refill() noexcept {
    // Word 0 of the counter walks through the stream; the remaining words
    // carry the stream address. The tag is folded into the block index high
    // bits so that distinct tags never collide for streams shorter than 2^24
    // blocks.
    const Philox4x32::Counter ctr{block_ | (stream_.tag << 24), stream_.sample,
                                  stream_.replicate, stream_.level};
    buffer_ = Philox4x32::block(ctr, key_);
    ++block_;
    cursor_ = 0;
  }

  Philox4x32::Key key_;
  StreamKey stream_;
  std::uint32_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int cursor_ = 4;
};

}  // namespace mlmcuq

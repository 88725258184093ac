#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pam {

// Philox 4x32-10 counter-based generator.
//
// Streams are addressed by (master seed, stream id, element index); every
// (stream, index) pair owns a disjoint counter range, so path- or run-level
// parallelism produces the same numbers no matter how work is scheduled.
// Counter layout: ctr = {block, index_lo, stream_lo, stream_hi}, key = master.
class Philox {
 public:
  Philox(std::uint64_t master, std::uint64_t stream, std::uint64_t index)
      : key_{static_cast<std::uint32_t>(master),
             static_cast<std::uint32_t>(master >> 32)},
        base_{0u, static_cast<std::uint32_t>(index),
              static_cast<std::uint32_t>(stream),
              static_cast<std::uint32_t>(stream >> 32)} {
    // high half of index folds into the stream word; indices stay < 2^32
    base_[2] ^= static_cast<std::uint32_t>(index >> 32);
    refill();
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return out_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // uniform on [0,1), 53-bit resolution
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform on (0,1]
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // standard normal via Box-Muller; caches the spare value
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_double_open();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  template <typename It>
  void fill_normal(It first, It last) {
    for (; first != last; ++first) *first = next_normal();
  }

  // raw block function, exposed for known-answer tests
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
      const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

 private:
  void refill() {
    auto ctr = base_;
    ctr[0] = block_index_++;
    out_ = block(ctr, key_);
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> base_;
  std::array<std::uint32_t, 4> out_{};
  std::uint32_t block_index_ = 0;
  int pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// (master seed, stream id) pair handed around by the Monte Carlo engines;
// the per-path/per-run index supplies the third coordinate.
struct SeedStream {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;
};

// Named substream ids, kept stable so that identical configs reproduce
// identical output bit for bit.
namespace stream {
inline constexpr std::uint64_t kBridge = 1;
inline constexpr std::uint64_t kBessel = 2;
inline constexpr std::uint64_t kPair = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kSpde = 5;
inline constexpr std::uint64_t kChaos = 6;
inline constexpr std::uint64_t kMoments = 7;
inline constexpr std::uint64_t kExperimentBase = 100;  // + experiment slot
}  // namespace stream

}  // namespace pam

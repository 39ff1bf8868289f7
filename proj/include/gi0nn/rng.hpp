#pragma once

#include <cstdint>

namespace gi0nn {

// Counter-based deterministic generator in the SplitMix64 family.
// The output sequence depends only on (key, counter), so identical seeds
// reproduce identical sequences on every platform, and split() derives
// statistically independent child streams without coordination.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ kKeyTweak)), counter_(0) {}

  std::uint64_t next_u64() {
    counter_ += kGolden;
    return mix(key_ + counter_);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe under log().
  double next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v >= threshold) return v % n;
    }
  }

  // Child stream `index`; children with distinct indices get distinct keys.
  RngStream split(std::uint64_t index) const {
    RngStream child;
    child.key_ = mix(mix(key_ + kGolden) ^ mix((index + 1) * kSplitGamma));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSplitGamma = 0xBF58476D1CE4E5B9ULL;
  static constexpr std::uint64_t kKeyTweak = 0xD1B54A32D192ED03ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace gi0nn

#pragma once

#include <complex>
#include <cstdint>

namespace qcm {

/// Counter-based 64-bit generator: output n is the SplitMix64 finalizer applied
/// to key + n * golden-ratio increment. Streams are reproducible bit-for-bit on
/// every platform, and split() derives statistically independent child streams
/// from (key, stream id) without touching the parent counter.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; deterministic given the stream.
  double normal();

  /// Complex Gaussian with independent standard normal real and imaginary parts.
  std::complex<double> complex_normal() { return {normal(), normal()}; }

  [[nodiscard]] CounterRng split(std::uint64_t stream) const {
    CounterRng child(0);
    child.key_ = mix(key_ ^ mix(stream + 0x9e3779b97f4a7c15ULL));
    return child;
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qcm

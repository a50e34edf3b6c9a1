#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace fasc {

/// Seeded random stream with a fixed transform from raw 64-bit draws to
/// uniforms and normals, so streams are bit-reproducible for a given build
/// (std::*_distribution leaves its algorithm to the implementation).
///
/// uniform(): top 53 bits of an mt19937_64 word scaled by 2^-53, in [0,1).
/// normal(): Marsaglia polar method; the second variate of each accepted
/// pair is cached and returned by the next call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
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

  /// Uniform integer in [0, n) by rejection, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Index drawn with probability proportional to weights (all >= 0, sum > 0).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double target = uniform() * total;
    double acc = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      acc += weights[j];
      if (target < acc) return j;
    }
    // rounding: fall back to the last positive weight
    for (std::size_t j = weights.size(); j-- > 0;)
      if (weights[j] > 0.0) return j;
    return 0;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fasc

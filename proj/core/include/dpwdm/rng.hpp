// Deterministic per-stream random number generation.
//
// Every Monte-Carlo run derives its generator from (seed, stream id) so
// results do not depend on thread scheduling.
#pragma once

#include <cstdint>
#include <random>

#include "dpwdm/common.hpp"

namespace dpwdm {

namespace detail {
// splitmix64 finalizer, used to decorrelate (seed, stream) pairs.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : gen_(detail::mix64(detail::mix64(seed) ^ detail::mix64(~stream))) {}

  double uniform() { return uni_(gen_); }
  double gaussian() { return norm_(gen_); }

  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  cplx cscg(double variance) {
    double s = std::sqrt(variance / 2.0);
    return {s * gaussian(), s * gaussian()};
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> norm_{0.0, 1.0};
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
};

}  // namespace dpwdm

// Thin FFTW wrapper with per-thread plan caching.
#pragma once

#include <vector>

#include "dpwdm/common.hpp"

namespace dpwdm {

/// In-place complex FFT of length n (any n; powers of two are fastest).
/// sign = -1 forward (e^{-jwt}), +1 inverse (unnormalized).
void fft_inplace(cplx* data, std::size_t n, int sign);

inline void fft(std::vector<cplx>& v) { fft_inplace(v.data(), v.size(), -1); }

/// Unnormalized inverse; caller divides by n when a true inverse is needed.
inline void ifft_raw(std::vector<cplx>& v) { fft_inplace(v.data(), v.size(), +1); }

inline void ifft(std::vector<cplx>& v) {
  ifft_raw(v);
  double inv = 1.0 / static_cast<double>(v.size());
  for (auto& x : v) x *= inv;
}

/// Smallest power of two >= n.
inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Smallest integer >= n with no prime factor above 7, so transforms of that
/// length stay fast.
inline std::size_t next_fft_friendly(std::size_t n) {
  if (n == 0) return 1;
  for (std::size_t v = n;; ++v) {
    std::size_t r = v;
    for (std::size_t p : {std::size_t{2}, std::size_t{3}, std::size_t{5},
                          std::size_t{7}})
      while (r % p == 0) r /= p;
    if (r == 1) return v;
  }
}

/// FFT-layout angular frequency of bin i for an n-point grid with sample
/// interval dt: bins [0, n/2) are non-negative, [n/2, n) negative.
inline double fft_omega(std::size_t i, std::size_t n, double dt) {
  auto si = static_cast<std::ptrdiff_t>(i);
  auto sn = static_cast<std::ptrdiff_t>(n);
  if (si >= sn / 2) si -= sn;
  return 2.0 * kPi * static_cast<double>(si) / (static_cast<double>(n) * dt);
}

}  // namespace dpwdm

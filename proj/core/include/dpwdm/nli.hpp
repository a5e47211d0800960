// Four-pulse nonlinear-interference coefficients.
//
// A(n,k,k'; t1,t2,t3) is a double integral over link position z and time of a
// product of four dispersed pulses. The time integral is evaluated as an
// FFT-based cross-correlation of two pulse products on an oversampled grid
// (the pulses have rect spectra with quadratic phase, so all shifts are exact
// spectral phases); the z integral uses composite Gauss-Legendre panels with
// adaptive doubling. One correlation yields a whole row of lags k at fixed
// (n, k'-k), which is what makes full walk-off-length tensors affordable.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "dpwdm/common.hpp"
#include "dpwdm/types.hpp"

namespace dpwdm {

enum class TensorKind : std::uint8_t {
  SelfSpm = 0,   // S     = A(.; 0, 0, 0)
  CrossSpm = 1,  // S~    = A(.; 0, dTbar, dTbar)
  SelfXpm = 2,   // C^c   = 2 A(.; 0, d_c(z), d_c(z))
  CrossXpm = 3,  // C~^c  = A(.; 0, dbar_c(z), dbar_c(z))
  MixedXpm = 4,  // D^c   = A(.; dTbar, d_c(z), dbar_c(z))
};

const char* tensor_kind_name(TensorKind kind);

struct QuadratureSettings {
  int n_max = 16;            // |n| bound
  int k_min = 0, k_max = 0;  // k range; 0,0 means auto (walk-off extended)
  int dk_max = 0;            // |k'-k| bound; 0 means n_max + 8
  int oversampling = 4;      // grid samples per symbol period
  int margin_symbols = 64;   // time-grid guard beyond pulse spread and shifts
  int walkoff_pad = 32;      // k-range padding around the walk-off window
  int gl_points = 8;         // Gauss-Legendre points per z panel
  int initial_panels = 0;    // 0 means auto from the oscillation rate
  int max_panels = 1 << 14;
  double z_tol = 1e-6;       // relative probe tolerance for panel doubling
  double drop_threshold = 1e-4;  // drop entries below this fraction of peak
  unsigned threads = 0;      // 0 = hardware concurrency

  void validate() const;
};

/// Sparse (n, k, k') -> complex tensor stored as rows over k at fixed
/// (n, delta = k'-k). Values are in 1/J (radians per joule of symbol energy).
class NliTensor {
 public:
  struct Row {
    int k_start = 0;
    std::vector<cplx> values;  // values[i] is the entry at k = k_start + i
  };

  TensorKind kind = TensorKind::SelfSpm;
  int channel = 0;  // c; 0 for SPM kinds
  QuadratureSettings settings;
  std::array<std::uint8_t, 32> provenance_key{};
  std::map<std::pair<int, int>, Row> rows;  // keyed by (n, delta)

  cplx at(int n, int k, int kprime) const;
  std::size_t entry_count() const;
  double peak_abs() const;
  /// Drops entries below threshold * peak and trims all-zero row ends.
  void prune(double threshold);

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [key, row] : rows)
      for (std::size_t i = 0; i < row.values.size(); ++i) {
        int k = row.k_start + static_cast<int>(i);
        f(key.first, k, k + key.second, row.values[i]);
      }
  }
};

/// Single coefficient of the four-pulse interaction integral with constant
/// pulse delays t1..t3 (seconds). Adaptive in the z panel count.
cplx compute_A(int n, int k, int kprime, double t1, double t2, double t3,
               const LinkConfig& link, const WdmPlan& plan,
               const QuadratureSettings& quad);

/// Intra-channel tensors: S and S~ (S~ uses the given second-polarization
/// delay for its two cross-polarization pulses).
std::pair<NliTensor, NliTensor> spm_tensors(const LinkConfig& link,
                                            const WdmPlan& plan,
                                            const QuadratureSettings& quad,
                                            double pol_delay);

/// Inter-channel tensors C, C~, D for interferer c != 0; the interferer pulse
/// delays follow the walk-off -beta2 * Omega_c * z inside the z integrand.
std::array<NliTensor, 3> xpm_tensors(const LinkConfig& link,
                                     const WdmPlan& plan,
                                     const QuadratureSettings& quad, int c);

/// Resolved k range of a tensor build (the auto walk-off window for XPM).
std::pair<int, int> resolve_k_range(const LinkConfig& link, const WdmPlan& plan,
                                    const QuadratureSettings& quad,
                                    TensorKind kind, int c);

/// Provenance key: SHA-256 over the link, plan, quadrature settings, kind and
/// channel, used to match cached tensors to their configuration.
std::array<std::uint8_t, 32> tensor_provenance_key(
    const LinkConfig& link, const WdmPlan& plan, const QuadratureSettings& quad,
    TensorKind kind, int c);

}  // namespace dpwdm

// Split-step Fourier propagation of the Manakov equation with ideal
// distributed amplification, and the receiver-side digital back-propagation.
#pragma once

#include "dpwdm/signal.hpp"
#include "dpwdm/types.hpp"

namespace dpwdm {

struct SsfmConfig {
  double step_km = 0.1;
  bool noise_injection = true;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // RNG stream (e.g. Monte-Carlo run index)

  void validate(const LinkConfig& link) const {
    if (step_km <= 0.0) throw Error("SsfmConfig: step_km must be > 0");
    double steps = link.length_km / step_km;
    if (std::abs(steps - std::round(steps)) > 1e-6 * steps)
      throw Error("SsfmConfig: step_km must divide length_km");
  }
};

/// Symmetric (Strang) split-step solution of the Manakov equation. The Kerr
/// phase uses the joint power |u|^2 + |ubar|^2 of both polarizations. With
/// noise_injection, each step adds independent circular Gaussian noise of
/// PSD ase_psd * step/length per polarization, band-limited to the
/// simulation bandwidth, injected mid-step.
SampledSignal ssfm_propagate(const SampledSignal& sig, const LinkConfig& link,
                             const SsfmConfig& cfg);

/// Digital back-propagation: noise-free propagation with -beta2 and -gamma
/// over the link length (f(L-z) = 1 under IDA).
SampledSignal receiver_dbp(const SampledSignal& sig, const LinkConfig& link,
                           const SsfmConfig& cfg);

}  // namespace dpwdm

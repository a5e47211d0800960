// Sampled-signal substrate: sinc pulses, the all-pass dispersion operator,
// WDM synthesis, and band-pass + matched filtering.
#pragma once

#include <vector>

#include "dpwdm/common.hpp"
#include "dpwdm/types.hpp"

namespace dpwdm {

/// Two complex polarization sequences on a common uniform time grid.
/// Sample i sits at t0 + i / sample_rate.
struct SampledSignal {
  std::vector<cplx> pol1, pol2;
  double sample_rate = 0.0;  // Hz
  double t0 = 0.0;           // s

  std::size_t size() const { return pol1.size(); }
  double dt() const { return 1.0 / sample_rate; }

  void validate() const {
    if (pol1.size() != pol2.size())
      throw Error("SampledSignal: polarization lengths differ");
    if (sample_rate <= 0.0) throw Error("SampledSignal: sample_rate must be > 0");
  }

  double energy_pol1() const;
  double energy_pol2() const;
  double energy() const { return energy_pol1() + energy_pol2(); }
};

/// Aligned complex symbol sequences for the two polarizations of one channel.
struct SymbolBlock {
  std::vector<cplx> pol1, pol2;
  double energy_per_symbol = 0.0;  // J, per polarization
  std::uint64_t seed = 0;

  std::size_t size() const { return pol1.size(); }
  void validate() const {
    if (pol1.size() != pol2.size())
      throw Error("SymbolBlock: polarization lengths differ");
  }
};

/// Unit-energy sinc pulse (1/sqrt(T)) sinc(t/T).
double sinc_pulse(double symbol_period, double t);

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  double px = kPi * x;
  return std::sin(px) / px;
}

inline double sinc_pulse(double symbol_period, double t) {
  if (symbol_period <= 0.0) throw Error("sinc_pulse: symbol period must be > 0");
  return sinc(t / symbol_period) / std::sqrt(symbol_period);
}

/// Applies the all-pass dispersion operator exp(j (beta2/2) Omega^2 z) to
/// both polarizations. beta2 in ps^2/km, z in km. Energy preserving.
SampledSignal dispersion_apply(const SampledSignal& sig, double beta2_ps2_per_km,
                               double z_km);

struct SynthesisOptions {
  int guard_symbols = 128;        // idle grid periods on each side of the block
  double min_oversampling = 2.0;  // reject sample rates below this x occupied bw
};

/// Superimposes all channels of the plan: per channel c and polarization,
/// sum_k b_k s(t - kT - delay) modulated to exp(j Omega_c t). The per-channel
/// symbol blocks are passed in plan channel order. The time grid is anchored
/// so t=0 is symbol 0 of channel 0, polarization 1.
///
/// The pulse trains are constructed spectrally on the cyclic grid (periodic
/// sinc), so the band limitation is exact and the matched-filter chain below
/// is an identity to machine precision. Requires an integer number of samples
/// per symbol period.
SampledSignal synthesize_wdm(const WdmPlan& plan,
                             const std::vector<SymbolBlock>& symbols,
                             double sample_rate,
                             const SynthesisOptions& opts = {});

/// Default simulation rate: 4x the occupied WDM bandwidth, rounded so the
/// symbol period is an integer number of samples.
double default_sample_rate(const WdmPlan& plan, double oversampling = 4.0);

/// Ideal band-pass (rect of width B around the channel center), matched
/// filter s*(-t), and symbol-rate sampling at t = mT + channel delay
/// (+ pol_delay on the second polarization). Returns num_symbols symbols
/// starting at symbol index first_symbol.
SymbolBlock bandpass_and_match(const SampledSignal& sig, const WdmPlan& plan,
                               int channel, double pol_delay,
                               std::size_t num_symbols, long first_symbol = 0);

}  // namespace dpwdm

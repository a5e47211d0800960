// Link physics and WDM grid descriptions shared by all modules.
#pragma once

#include <vector>

#include "dpwdm/common.hpp"

namespace dpwdm {

/// Fiber/link physics. Config fields use the customary engineering units;
/// accessors convert to SI (seconds, meters, joules, watts).
struct LinkConfig {
  double alpha_db_per_km = 0.2;
  double beta2_ps2_per_km = -21.7;
  double gamma_per_w_km = 1.27;       // 1/(W km)
  double length_km = 1000.0;
  double eta_phonon = 1.0;
  double n_ase_psd = 0.0;             // W/Hz per pol; 0 means "derive from link"
  double b_ase_hz = 0.0;              // receiver noise bandwidth; 0 = simulation bw
  double wavelength_nm = 1550.0;      // only enters the ASE floor

  double beta2() const { return beta2_ps2_per_km * 1e-27; }     // s^2/m
  double gamma() const { return gamma_per_w_km * 1e-3; }        // 1/(W m)
  double length() const { return length_km * 1e3; }             // m
  double alpha_per_m() const {
    return alpha_db_per_km * std::log(10.0) / 10.0 / 1e3;
  }
  /// Accumulated ASE power spectral density per polarization (W/Hz) for
  /// ideal distributed amplification: alpha * L * h * nu * eta.
  double ase_psd() const {
    if (n_ase_psd > 0.0) return n_ase_psd;
    double nu = kLightSpeed / (wavelength_nm * 1e-9);
    return alpha_per_m() * length() * kPlanck * nu * eta_phonon;
  }

  void validate() const {
    if (length_km <= 0.0) throw Error("LinkConfig: length_km must be > 0");
    if (gamma_per_w_km < 0.0) throw Error("LinkConfig: gamma must be >= 0");
    if (n_ase_psd < 0.0) throw Error("LinkConfig: n_ase_psd must be >= 0");
  }
};

/// One WDM channel (or subcarrier treated as a channel).
struct WdmChannel {
  int index = 0;              // c; 0 is the channel of interest
  double center_freq = 0.0;   // Omega^(c), rad/s
  double energy = 0.0;        // E^(c), J per symbol, first polarization
  double energy_bar = 0.0;    // Ebar^(c), J
  double fourth_moment = 0.0;      // Q^(c), J^2
  double fourth_moment_bar = 0.0;  // Qbar^(c), J^2
  double delay = 0.0;         // DeltaT^(c), s
  double delay_bar = 0.0;     // DeltaTbar^(c), s
};

struct WdmPlan {
  std::vector<WdmChannel> channels;   // must contain index 0
  double symbol_period = 20e-12;      // T, s
  double channel_bandwidth = 50e9;    // B, Hz
  int subcarriers_per_channel = 1;    // S

  const WdmChannel& channel(int c) const {
    for (const auto& ch : channels)
      if (ch.index == c) return ch;
    throw Error("WdmPlan: no channel with index " + std::to_string(c));
  }
  bool has_channel(int c) const {
    for (const auto& ch : channels)
      if (ch.index == c) return true;
    return false;
  }

  void validate() const {
    if (symbol_period <= 0.0) throw Error("WdmPlan: symbol_period must be > 0");
    if (subcarriers_per_channel < 1)
      throw Error("WdmPlan: subcarriers_per_channel must be >= 1");
    const WdmChannel& coi = channel(0);  // throws if absent
    if (coi.delay != 0.0)
      throw Error("WdmPlan: channel 0 first-pol delay must be 0 (delay reference)");
    double min_spacing = 0.0;
    for (const auto& a : channels) {
      if (a.energy < 0.0 || a.energy_bar < 0.0)
        throw Error("WdmPlan: negative symbol energy");
      for (const auto& b : channels) {
        if (a.index == b.index) continue;
        double d = std::abs(a.center_freq - b.center_freq);
        if (min_spacing == 0.0 || d < min_spacing) min_spacing = d;
      }
    }
    if (channels.size() > 1 && 2.0 * kPi * channel_bandwidth > min_spacing * (1.0 + 1e-12))
      throw Error("WdmPlan: 2*pi*B exceeds minimum channel spacing");
  }
};

/// Builds a plan of `n_channels` equally spaced channels (c symmetric around
/// 0) with identical per-pol symbol energy E and fourth moment Q.
WdmPlan make_uniform_plan(int n_channels, double spacing_hz, double bandwidth_hz,
                          double symbol_period, double energy, double fourth_moment);

inline WdmPlan make_uniform_plan(int n_channels, double spacing_hz,
                                 double bandwidth_hz, double symbol_period,
                                 double energy, double fourth_moment) {
  if (n_channels < 1 || n_channels % 2 == 0)
    throw Error("make_uniform_plan: n_channels must be odd and >= 1");
  WdmPlan plan;
  plan.symbol_period = symbol_period;
  plan.channel_bandwidth = bandwidth_hz;
  int half = n_channels / 2;
  for (int c = -half; c <= half; ++c) {
    WdmChannel ch;
    ch.index = c;
    ch.center_freq = 2.0 * kPi * spacing_hz * c;
    ch.energy = ch.energy_bar = energy;
    ch.fourth_moment = ch.fourth_moment_bar = fourth_moment;
    plan.channels.push_back(ch);
  }
  return plan;
}

}  // namespace dpwdm

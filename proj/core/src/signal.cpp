#include "dpwdm/signal.hpp"

#include <algorithm>
#include <cmath>

#include "dpwdm/fft.hpp"

namespace dpwdm {

namespace {

double grid_energy(const std::vector<cplx>& v, double dt) {
  double e = 0.0;
  for (const auto& x : v) e += std::norm(x);
  return e * dt;
}

/// Occupied two-sided bandwidth of the plan in Hz.
double occupied_bandwidth(const WdmPlan& plan) {
  double lo = 0.0, hi = 0.0;
  for (const auto& ch : plan.channels) {
    double f = ch.center_freq / (2.0 * kPi);
    lo = std::min(lo, f - plan.channel_bandwidth / 2.0);
    hi = std::max(hi, f + plan.channel_bandwidth / 2.0);
  }
  return hi - lo;
}

long symbols_per_sample_period(const SampledSignal& sig, double symbol_period) {
  double n = symbol_period * sig.sample_rate;
  long ni = std::lround(n);
  if (ni < 1 || std::abs(n - static_cast<double>(ni)) > 1e-6)
    throw Error("signal: symbol period must be an integer number of samples");
  return ni;
}

}  // namespace

double SampledSignal::energy_pol1() const { return grid_energy(pol1, dt()); }
double SampledSignal::energy_pol2() const { return grid_energy(pol2, dt()); }

SampledSignal dispersion_apply(const SampledSignal& sig, double beta2_ps2_per_km,
                               double z_km) {
  sig.validate();
  if (sig.size() == 0) throw Error("dispersion_apply: empty signal");
  SampledSignal out = sig;
  if (z_km == 0.0 || beta2_ps2_per_km == 0.0) return out;
  const double beta2 = beta2_ps2_per_km * 1e-27;  // s^2/m
  const double z = z_km * 1e3;                    // m
  const std::size_t n = sig.size();
  const double dt = sig.dt();
  std::vector<cplx> response(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = fft_omega(i, n, dt);
    response[i] = std::polar(1.0, 0.5 * beta2 * w * w * z);
  }
  for (auto* pol : {&out.pol1, &out.pol2}) {
    fft(*pol);
    for (std::size_t i = 0; i < n; ++i) (*pol)[i] *= response[i];
    ifft(*pol);
  }
  return out;
}

double default_sample_rate(const WdmPlan& plan, double oversampling) {
  double span = occupied_bandwidth(plan);
  double fs = oversampling * span;
  // Round up so the symbol period is an integer number of samples.
  long n = static_cast<long>(std::ceil(fs * plan.symbol_period - 1e-9));
  n = std::max<long>(n, 2);
  return static_cast<double>(n) / plan.symbol_period;
}

SampledSignal synthesize_wdm(const WdmPlan& plan,
                             const std::vector<SymbolBlock>& symbols,
                             double sample_rate, const SynthesisOptions& opts) {
  plan.validate();
  if (symbols.size() != plan.channels.size())
    throw Error("synthesize_wdm: one symbol block per plan channel required");
  if (sample_rate < opts.min_oversampling * occupied_bandwidth(plan))
    throw Error("synthesize_wdm: sample rate below the anti-aliasing minimum");

  const double T = plan.symbol_period;
  const double dt = 1.0 / sample_rate;
  const double spp_real = T * sample_rate;
  const auto spp = static_cast<std::size_t>(std::llround(spp_real));
  if (spp < 1 || std::abs(spp_real - static_cast<double>(spp)) > 1e-6)
    throw Error("synthesize_wdm: symbol period must be an integer number of samples");

  std::size_t max_len = 0;
  double max_delay = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    symbols[i].validate();
    max_len = std::max(max_len, symbols[i].size());
    max_delay = std::max({max_delay, std::abs(plan.channels[i].delay),
                          std::abs(plan.channels[i].delay_bar)});
  }
  if (max_len == 0) throw Error("synthesize_wdm: no symbols");

  // Cyclic grid of M whole symbol periods: guard + delay margin on each side.
  const auto delay_margin = static_cast<std::size_t>(std::ceil(max_delay / T));
  const std::size_t lead = opts.guard_symbols + delay_margin;
  const std::size_t m_grid = max_len + 2 * lead;
  const std::size_t n = m_grid * spp;

  SampledSignal out;
  out.sample_rate = sample_rate;
  out.t0 = -static_cast<double>(lead) * T;
  out.pol1.assign(n, cplx{0.0, 0.0});
  out.pol2.assign(n, cplx{0.0, 0.0});

  const double sqrt_t = std::sqrt(T);
  const double band_edge = kPi / T;
  // Only bins exactly on the band edge take the halved midpoint value; the
  // tolerance absorbs rounding in the bin frequencies, nothing more. On grids
  // with an odd number of symbol slots the edge falls between bins and every
  // in-band bin keeps full weight.
  const double edge_tol = 1e-9 * band_edge;

  std::vector<cplx> sym_dft(m_grid);
  std::vector<cplx> chan(n);
  for (std::size_t ci = 0; ci < plan.channels.size(); ++ci) {
    const WdmChannel& ch = plan.channels[ci];
    const SymbolBlock& blk = symbols[ci];
    for (int pol = 0; pol < 2; ++pol) {
      const auto& syms = pol == 0 ? blk.pol1 : blk.pol2;
      auto& dst = pol == 0 ? out.pol1 : out.pol2;
      const double delay = pol == 0 ? ch.delay : ch.delay_bar;

      // DFT of the symbol train over the grid period: the grid spans an
      // integer number of symbol slots, so each frequency bin maps onto one
      // bin of this length-M transform.
      std::fill(sym_dft.begin(), sym_dft.end(), cplx{0.0, 0.0});
      std::copy(syms.begin(), syms.end(), sym_dft.begin());
      fft(sym_dft);

      // Baseband spectrum: (1/dt) sqrt(T) rect(w) sum_k x_k e^{-jw(kT+delay)},
      // referenced to t0. The sampled pulse spectrum takes its midpoint value
      // at the band edge, hence the half weight there.
      std::fill(chan.begin(), chan.end(), cplx{0.0, 0.0});
      for (std::size_t b = 0; b < n; ++b) {
        double w = fft_omega(b, n, dt);
        double aw = std::abs(w);
        if (aw > band_edge + edge_tol) continue;
        double amp = sqrt_t / dt;
        if (aw > band_edge - edge_tol) amp *= 0.5;
        chan[b] = amp * sym_dft[b % m_grid] *
                  std::polar(1.0, w * (out.t0 - delay));
      }
      ifft(chan);

      if (ch.center_freq == 0.0) {
        for (std::size_t i = 0; i < n; ++i) dst[i] += chan[i];
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          double t = out.t0 + static_cast<double>(i) * dt;
          dst[i] += chan[i] * std::polar(1.0, ch.center_freq * t);
        }
      }
    }
  }
  return out;
}

SymbolBlock bandpass_and_match(const SampledSignal& sig, const WdmPlan& plan,
                               int channel, double pol_delay,
                               std::size_t num_symbols, long first_symbol) {
  sig.validate();
  const WdmChannel& ch = plan.channel(channel);
  const double T = plan.symbol_period;
  const long spp = symbols_per_sample_period(sig, T);
  const std::size_t n = sig.size();
  const double dt = sig.dt();
  const double band_edge =
      std::min(kPi * plan.channel_bandwidth, kPi / T);  // h_B and matched filter

  SymbolBlock out;
  out.seed = 0;
  out.pol1.resize(num_symbols);
  out.pol2.resize(num_symbols);

  std::vector<cplx> work(n);
  for (int pol = 0; pol < 2; ++pol) {
    const auto& src = pol == 0 ? sig.pol1 : sig.pol2;
    auto& dst = pol == 0 ? out.pol1 : out.pol2;
    const double delay = pol == 0 ? ch.delay : pol_delay;

    // Demodulate the channel to baseband.
    for (std::size_t i = 0; i < n; ++i) {
      double t = sig.t0 + static_cast<double>(i) * dt;
      work[i] = src[i] * std::polar(1.0, -ch.center_freq * t);
    }
    fft_inplace(work.data(), n, -1);

    // Sampling time of symbol 0, split into an integer grid index and a
    // fractional remainder realized as a spectral phase.
    const double tau0 = static_cast<double>(first_symbol) * T + delay - sig.t0;
    const auto i0 = static_cast<long>(std::llround(std::floor(tau0 / dt)));
    const double frac = tau0 - static_cast<double>(i0) * dt;

    // The tolerance keeps the exact edge bins of an aligned grid in-band
    // regardless of rounding in the band_edge computation, without admitting
    // genuinely out-of-band bins on grids where the edge falls between bins.
    const double sqrt_t = std::sqrt(T);
    const double edge_tol = 1e-9 * band_edge;
    for (std::size_t i = 0; i < n; ++i) {
      double w = fft_omega(i, n, dt);
      if (std::abs(w) <= band_edge + edge_tol)
        work[i] *= sqrt_t * std::polar(1.0, w * frac);
      else
        work[i] = cplx{0.0, 0.0};
    }
    fft_inplace(work.data(), n, +1);
    const double inv_n = 1.0 / static_cast<double>(n);

    for (std::size_t m = 0; m < num_symbols; ++m) {
      long idx = i0 + static_cast<long>(m) * spp;
      if (idx < 0 || idx >= static_cast<long>(n))
        throw Error("bandpass_and_match: requested symbol outside the signal grid");
      dst[m] = work[static_cast<std::size_t>(idx)] * inv_n;
    }
  }
  out.energy_per_symbol = ch.energy;
  return out;
}

}  // namespace dpwdm

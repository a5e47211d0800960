#include "dpwdm/ssfm.hpp"

#include <cmath>

#include "dpwdm/fft.hpp"
#include "dpwdm/rng.hpp"

namespace dpwdm {

namespace {

void apply_response(std::vector<cplx>& pol, const std::vector<cplx>& resp) {
  fft(pol);
  for (std::size_t i = 0; i < pol.size(); ++i) pol[i] *= resp[i];
  ifft(pol);
}

void check_finite(const SampledSignal& s, long step) {
  for (const auto* pol : {&s.pol1, &s.pol2})
    for (const auto& x : *pol)
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
        throw Error("ssfm: non-finite sample at step " + std::to_string(step) +
                    " (power too high for the step size?)");
}

SampledSignal propagate(const SampledSignal& sig, double beta2, double gamma,
                        double length, double noise_psd_total,
                        const SsfmConfig& cfg) {
  sig.validate();
  if (sig.size() == 0) throw Error("ssfm: empty signal");

  const auto n_steps = static_cast<long>(std::llround(length / (cfg.step_km * 1e3)));
  const double h = length / static_cast<double>(n_steps);  // m
  const std::size_t n = sig.size();
  const double dt = sig.dt();

  std::vector<cplx> disp_half(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = fft_omega(i, n, dt);
    disp_half[i] = std::polar(1.0, 0.25 * beta2 * w * w * h);
  }

  const double noise_var =
      noise_psd_total > 0.0
          ? noise_psd_total * (h / length) * sig.sample_rate  // per sample per pol
          : 0.0;
  Rng rng(cfg.seed, cfg.stream);

  SampledSignal u = sig;
  for (long step = 0; step < n_steps; ++step) {
    apply_response(u.pol1, disp_half);
    apply_response(u.pol2, disp_half);
    for (std::size_t i = 0; i < n; ++i) {
      double p = std::norm(u.pol1[i]) + std::norm(u.pol2[i]);
      cplx rot = std::polar(1.0, gamma * h * p);
      u.pol1[i] *= rot;
      u.pol2[i] *= rot;
    }
    if (noise_var > 0.0) {
      for (std::size_t i = 0; i < n; ++i) u.pol1[i] += rng.cscg(noise_var);
      for (std::size_t i = 0; i < n; ++i) u.pol2[i] += rng.cscg(noise_var);
    }
    apply_response(u.pol1, disp_half);
    apply_response(u.pol2, disp_half);
    if (step % 64 == 63) check_finite(u, step);
  }
  check_finite(u, n_steps);
  return u;
}

}  // namespace

SampledSignal ssfm_propagate(const SampledSignal& sig, const LinkConfig& link,
                             const SsfmConfig& cfg) {
  link.validate();
  cfg.validate(link);
  double noise = cfg.noise_injection ? link.ase_psd() : 0.0;
  return propagate(sig, link.beta2(), link.gamma(), link.length(), noise, cfg);
}

SampledSignal receiver_dbp(const SampledSignal& sig, const LinkConfig& link,
                           const SsfmConfig& cfg) {
  link.validate();
  cfg.validate(link);
  return propagate(sig, -link.beta2(), -link.gamma(), link.length(), 0.0, cfg);
}

}  // namespace dpwdm

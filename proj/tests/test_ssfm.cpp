#include "dpwdm/ssfm.hpp"

#include <cmath>

#include "doctest.h"
#include "dpwdm/rng.hpp"
#include "test_helpers.hpp"

using namespace dpwdm;
using dpwdm::test::random_symbols;
using dpwdm::test::rel_error;

namespace {

constexpr double kT = 20e-12;
constexpr double kE = 5e-15;

SampledSignal test_signal(std::uint64_t seed, std::size_t n_sym = 64,
                          double energy = kE) {
  WdmPlan plan = make_uniform_plan(1, 50e9, 50e9, kT, energy, 2.0 * energy * energy);
  Rng rng(seed);
  std::vector<SymbolBlock> syms{random_symbols(n_sym, energy, rng)};
  return synthesize_wdm(plan, syms, default_sample_rate(plan));
}

}  // namespace

TEST_CASE("gamma=0, noise off reduces to the dispersion operator") {
  SampledSignal x = test_signal(11);
  LinkConfig link;
  link.gamma_per_w_km = 0.0;
  link.length_km = 500.0;
  SsfmConfig cfg;
  cfg.noise_injection = false;
  cfg.step_km = 1.0;
  SampledSignal got = ssfm_propagate(x, link, cfg);
  SampledSignal want = dispersion_apply(x, link.beta2_ps2_per_km, link.length_km);
  CHECK(rel_error(got, want) < 1e-9);
}

TEST_CASE("beta2=0, noise off is the exact joint-power Kerr rotation") {
  SampledSignal x = test_signal(12, 32, 1e-12);  // high power: visible rotation
  LinkConfig link;
  link.beta2_ps2_per_km = 0.0;
  link.length_km = 100.0;
  SsfmConfig cfg;
  cfg.noise_injection = false;
  cfg.step_km = 10.0;
  SampledSignal got = ssfm_propagate(x, link, cfg);

  SampledSignal want = x;
  const double gl = link.gamma() * link.length();
  for (std::size_t i = 0; i < x.size(); ++i) {
    double p = std::norm(x.pol1[i]) + std::norm(x.pol2[i]);
    cplx rot = std::polar(1.0, gl * p);
    want.pol1[i] *= rot;
    want.pol2[i] *= rot;
  }
  CHECK(rel_error(got, want) < 1e-6);
}

TEST_CASE("noise-free propagation conserves energy") {
  SampledSignal x = test_signal(13);
  LinkConfig link;
  link.length_km = 1000.0;
  SsfmConfig cfg;
  cfg.noise_injection = false;
  cfg.step_km = 5.0;
  SampledSignal y = ssfm_propagate(x, link, cfg);
  CHECK(y.energy() == doctest::Approx(x.energy()).epsilon(1e-9));
}

TEST_CASE("back-propagation inverts a noise-free link") {
  SampledSignal x = test_signal(14);
  LinkConfig link;  // Table-style link, 1000 km
  SsfmConfig cfg;
  cfg.noise_injection = false;
  cfg.step_km = 0.1;
  SampledSignal y = ssfm_propagate(x, link, cfg);
  SampledSignal back = receiver_dbp(y, link, cfg);
  CHECK(rel_error(back, x) < 1e-4);
}

TEST_CASE("back-propagation with gamma=0 is inverse dispersion") {
  SampledSignal x = test_signal(15);
  LinkConfig link;
  link.gamma_per_w_km = 0.0;
  link.length_km = 400.0;
  SsfmConfig cfg;
  cfg.noise_injection = false;
  cfg.step_km = 2.0;
  SampledSignal got = receiver_dbp(x, link, cfg);
  SampledSignal want = dispersion_apply(x, -link.beta2_ps2_per_km, link.length_km);
  CHECK(rel_error(got, want) < 1e-9);
}

TEST_CASE("zero in, zero out") {
  SampledSignal x = test_signal(16);
  std::fill(x.pol1.begin(), x.pol1.end(), cplx{0.0, 0.0});
  std::fill(x.pol2.begin(), x.pol2.end(), cplx{0.0, 0.0});
  LinkConfig link;
  link.length_km = 100.0;
  SsfmConfig cfg;
  cfg.noise_injection = false;
  cfg.step_km = 1.0;
  CHECK(ssfm_propagate(x, link, cfg).energy() == 0.0);
  CHECK(receiver_dbp(x, link, cfg).energy() == 0.0);
}

TEST_CASE("halving the step scales the splitting error by about 4") {
  SampledSignal x = test_signal(17, 32, 2e-13);
  LinkConfig link;
  link.length_km = 100.0;
  SsfmConfig cfg;
  cfg.noise_injection = false;

  auto run = [&](double step) {
    SsfmConfig c = cfg;
    c.step_km = step;
    return ssfm_propagate(x, link, c);
  };
  SampledSignal u1 = run(2.0), u2 = run(1.0), u4 = run(0.5);
  auto diff = [](const SampledSignal& a, const SampledSignal& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      d += std::norm(a.pol1[i] - b.pol1[i]) + std::norm(a.pol2[i] - b.pol2[i]);
    return std::sqrt(d);
  };
  double ratio = diff(u1, u2) / diff(u2, u4);
  CHECK(ratio > 4.0 * 0.7);
  CHECK(ratio < 4.0 * 1.3);
}

TEST_CASE("injected noise has the configured power and independent polarizations") {
  const double fs = 200e9;
  const std::size_t n = 1 << 16;
  SampledSignal x;
  x.sample_rate = fs;
  x.t0 = 0.0;
  x.pol1.assign(n, {0.0, 0.0});
  x.pol2.assign(n, {0.0, 0.0});

  LinkConfig link;
  link.length_km = 10.0;
  link.n_ase_psd = 1e-17;
  SsfmConfig cfg;
  cfg.step_km = 1.0;
  cfg.seed = 42;
  SampledSignal y = ssfm_propagate(x, link, cfg);

  const double var = link.n_ase_psd * fs;  // per sample per pol
  double p1 = y.energy_pol1() * fs / static_cast<double>(n);
  double p2 = y.energy_pol2() * fs / static_cast<double>(n);
  double se = var / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(p1 - var) < 4.0 * se);
  CHECK(std::abs(p2 - var) < 4.0 * se);

  cplx cross{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) cross += y.pol1[i] * std::conj(y.pol2[i]);
  cross /= static_cast<double>(n);
  double se_cross = var / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(cross.real()) < 3.0 * se_cross);
  CHECK(std::abs(cross.imag()) < 3.0 * se_cross);
}

TEST_CASE("determinism: same (seed, stream) gives identical noise, streams differ") {
  SampledSignal x = test_signal(18, 16);
  LinkConfig link;
  link.length_km = 10.0;
  SsfmConfig cfg;
  cfg.step_km = 1.0;
  cfg.seed = 7;
  SampledSignal a = ssfm_propagate(x, link, cfg);
  SampledSignal b = ssfm_propagate(x, link, cfg);
  CHECK(rel_error(a, b) == 0.0);
  cfg.stream = 1;
  SampledSignal c = ssfm_propagate(x, link, cfg);
  CHECK(rel_error(a, c) > 1e-6);
}

TEST_CASE("invalid step sizes are rejected") {
  LinkConfig link;
  SsfmConfig cfg;
  cfg.step_km = 0.0;
  CHECK_THROWS_AS(cfg.validate(link), Error);
  cfg.step_km = 0.3;  // does not divide 1000 km
  CHECK_THROWS_AS(cfg.validate(link), Error);
}

#include <benchmark/benchmark.h>

#include "dpwdm/inference.hpp"
#include "dpwdm/rng.hpp"
#include "dpwdm/rotation.hpp"
#include "dpwdm/rp.hpp"
#include "dpwdm/signal.hpp"
#include "dpwdm/ssfm.hpp"

namespace {

using namespace dpwdm;

SampledSignal make_signal(std::size_t n_sym) {
  const double t = 20e-12, e = 5e-15;
  WdmPlan plan = make_uniform_plan(1, 50e9, 50e9, t, e, 2 * e * e);
  Rng rng(1);
  SymbolBlock blk;
  blk.energy_per_symbol = e;
  blk.pol1.resize(n_sym);
  blk.pol2.resize(n_sym);
  for (std::size_t i = 0; i < n_sym; ++i) {
    blk.pol1[i] = rng.cscg(e);
    blk.pol2[i] = rng.cscg(e);
  }
  return synthesize_wdm(plan, {blk}, default_sample_rate(plan));
}

void BM_Dispersion(benchmark::State& state) {
  SampledSignal sig = make_signal(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    SampledSignal out = dispersion_apply(sig, -21.7, 1000.0);
    benchmark::DoNotOptimize(out.pol1.data());
  }
}
BENCHMARK(BM_Dispersion)->Arg(256)->Arg(1024);

void BM_SsfmStep(benchmark::State& state) {
  SampledSignal sig = make_signal(256);
  LinkConfig link;
  link.length_km = 1.0;
  SsfmConfig cfg;
  cfg.step_km = 1.0;
  cfg.noise_injection = false;
  for (auto _ : state) {
    SampledSignal out = ssfm_propagate(sig, link, cfg);
    benchmark::DoNotOptimize(out.pol1.data());
  }
}
BENCHMARK(BM_SsfmStep);

// Synthetic dense tensor over |n| <= n_max, |delta| <= dk, k in [-k_half,
// k_half]; magnitudes decay with the index radius like the real coefficients.
NliTensor synthetic_tensor(int n_max, int dk, int k_half) {
  NliTensor t;
  t.kind = TensorKind::SelfXpm;
  t.channel = 1;
  for (int n = -n_max; n <= n_max; ++n)
    for (int d = -dk; d <= dk; ++d) {
      NliTensor::Row row;
      row.k_start = -k_half;
      for (int k = -k_half; k <= k_half; ++k)
        row.values.push_back(cplx(1e12, 5e11) /
                             (1.0 + n * n + d * d + 0.01 * k * k));
      t.rows[{n, d}] = std::move(row);
    }
  return t;
}

void BM_RpDecompose(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  RpTensors bundle;
  for (int c : {1, -1}) {
    RpTensors::Interferer i;
    i.channel = c;
    i.c = synthetic_tensor(4, 12, 60);
    i.c_tilde = i.c;
    i.d = i.c;
    bundle.interferers.push_back(std::move(i));
  }
  const RpEngine engine(bundle, m);
  const double e = 5e-15;
  Rng rng(3);
  SymbolBlock x = gaussian_symbols(m, e, e, rng);
  std::vector<SymbolBlock> ifer{gaussian_symbols(m, e, e, rng),
                                gaussian_symbols(m, e, e, rng)};
  for (auto _ : state) {
    NliDecomposition d = engine.decompose(x, ifer, RpMode::Dbp);
    benchmark::DoNotOptimize(d.theta.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_RpDecompose)->Arg(1024)->Arg(4096);

void BM_ParticleFilter(benchmark::State& state) {
  const std::size_t m = 256, particles =
      static_cast<std::size_t>(state.range(0));
  const double e = 1.0, sigma2 = 0.05;
  MrParams p;
  p.memory = 4;
  p.cov_phi = {1e-3, 9e-4, 7e-4, 5e-4, 3e-4};
  p.cov_psi = p.cov_phi;
  const ArFit f = ar_fit(p.cov_phi);
  p.ar_coeffs = f.coeffs;
  p.innovation_sd = f.innovation_sd;
  p.psi_ar_coeffs = f.coeffs;
  p.psi_innovation_sd = f.innovation_sd;

  Rng rng(5);
  std::vector<SymbolBlock> xs{gaussian_symbols(m, e, e, rng)};
  std::vector<SymbolBlock> ys = xs;
  for (std::size_t i = 0; i < m; ++i) {
    ys[0].pol1[i] += rng.cscg(sigma2);
    ys[0].pol2[i] += rng.cscg(sigma2);
  }
  WhitenFilter identity;
  identity.taps = {1.0};
  identity.taps_bar = {1.0};
  PfConfig pf;
  pf.particles = particles;
  for (auto _ : state) {
    PfResult r = pf_conditional_entropy_runs(ys, xs, p, identity, sigma2, pf);
    benchmark::DoNotOptimize(r.bits.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(m * particles));
}
BENCHMARK(BM_ParticleFilter)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();

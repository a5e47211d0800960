#include "dpwdm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

using namespace dpwdm;

namespace {

constexpr double kT = 20e-12;
constexpr double kE = 5e-15;
const cplx kJ{0.0, 1.0};

WdmPlan plan_3ch() {
  return make_uniform_plan(3, 50e9, 50e9, kT, kE, 2.0 * kE * kE);
}

RpTensors small_tensors() {
  LinkConfig link;
  link.length_km = 40.0;
  WdmPlan plan = plan_3ch();
  QuadratureSettings quad;
  quad.n_max = 3;
  quad.k_min = -16;
  quad.k_max = 6;
  quad.dk_max = 3;
  quad.drop_threshold = 0.0;
  RpTensors t;
  for (int c : {-1, 1}) {
    auto [cc, ct, d] = xpm_tensors(link, plan, quad, c);
    t.interferers.push_back(
        RpTensors::Interferer{c, std::move(cc), std::move(ct), std::move(d)});
  }
  return t;
}

struct Energies {
  double e, e_bar, q, q_bar;
};

Energies energies(const WdmPlan& plan, int c) {
  const auto& ch = plan.channel(c);
  return {ch.energy, ch.energy_bar, ch.fourth_moment, ch.fourth_moment_bar};
}

/// Brute-force moment sums straight from tensor lookups; independent of the
/// row-wise contraction code under test.
struct RefMoments {
  double theta_mean = 0.0, theta_bar_mean = 0.0;
  std::vector<double> r_theta, r_theta_bar, r_theta_cross;
  std::vector<cplx> r_psi, r_v, r_v_bar, isi;
};

RefMoments ref_moments(const RpTensors& t, const WdmPlan& plan,
                       std::size_t lag_max) {
  constexpr int kK = 40;  // covers every stored k and k'
  constexpr int kN = 12;
  const Energies coi = energies(plan, 0);
  RefMoments out;
  out.r_theta.assign(lag_max + 1, 0.0);
  out.r_theta_bar.assign(lag_max + 1, 0.0);
  out.r_theta_cross.assign(lag_max + 1, 0.0);
  out.r_psi.assign(lag_max + 1, cplx{0.0, 0.0});
  out.r_v.assign(lag_max + 1, cplx{0.0, 0.0});
  out.r_v_bar.assign(lag_max + 1, cplx{0.0, 0.0});
  out.isi.assign(lag_max + 1, cplx{0.0, 0.0});

  for (const auto& intf : t.interferers) {
    const Energies ch = energies(plan, intf.channel);
    const double qe = ch.q - ch.e * ch.e;
    const double qe_bar = ch.q_bar - ch.e_bar * ch.e_bar;

    cplx mc{0.0, 0.0}, mt{0.0, 0.0};
    for (int k = -kK; k <= kK; ++k) {
      mc += intf.c.at(0, k, k);
      mt += intf.c_tilde.at(0, k, k);
    }
    out.theta_mean += (ch.e * mc + ch.e_bar * mt).real();
    out.theta_bar_mean += (ch.e_bar * mc + ch.e * mt).real();

    for (std::size_t l = 0; l <= lag_max; ++l) {
      const int lag = static_cast<int>(l);
      cplx th{0.0, 0.0}, th_bar{0.0, 0.0}, th_x{0.0, 0.0}, ps{0.0, 0.0};
      for (int k = -kK; k <= kK; ++k)
        for (int kp = -kK; kp <= kK; ++kp) {
          const cplx c1 = intf.c.at(0, k, kp);
          const cplx t1 = intf.c_tilde.at(0, k, kp);
          const cplx c2 = std::conj(intf.c.at(0, k - lag, kp - lag));
          const cplx t2 = std::conj(intf.c_tilde.at(0, k - lag, kp - lag));
          const double wc = k == kp ? qe : ch.e * ch.e;
          const double wt = k == kp ? qe_bar : ch.e_bar * ch.e_bar;
          const double wc_bar = k == kp ? qe_bar : ch.e_bar * ch.e_bar;
          const double wt_bar = k == kp ? qe : ch.e * ch.e;
          th += wc * c1 * c2 + wt * t1 * t2;
          th_bar += wc_bar * c1 * c2 + wt_bar * t1 * t2;
          th_x += wc * c1 * t2 + wt * t1 * c2;
          ps += intf.d.at(0, k, kp) * std::conj(intf.d.at(0, k - lag, kp - lag));
        }
      out.r_theta[l] += th.real();
      out.r_theta_bar[l] += th_bar.real();
      out.r_theta_cross[l] += th_x.real();
      out.r_psi[l] += ch.e * ch.e_bar * ps;

      cplx v{0.0, 0.0}, v_bar{0.0, 0.0};
      for (int n = -kN; n <= kN; ++n) {
        if (n == 0 || n == lag) continue;
        for (int k = -kK; k <= kK; ++k)
          for (int kp = -kK; kp <= kK; ++kp) {
            const cplx c1 = intf.c.at(n, k, kp);
            const cplx t1 = intf.c_tilde.at(n, k, kp);
            const cplx c2 =
                std::conj(intf.c.at(n - lag, k - lag, kp - lag));
            const cplx t2 =
                std::conj(intf.c_tilde.at(n - lag, k - lag, kp - lag));
            const double wc = k == kp ? qe : ch.e * ch.e;
            const double wt = k == kp ? qe_bar : ch.e_bar * ch.e_bar;
            v += wc * c1 * c2 + wt * t1 * t2;
            v_bar += (k == kp ? qe_bar : ch.e_bar * ch.e_bar) * c1 * c2 +
                     (k == kp ? qe : ch.e * ch.e) * t1 * t2;
            const cplx dd = intf.d.at(n, k, kp) *
                            std::conj(intf.d.at(n - lag, k - lag, kp - lag));
            v += (coi.e_bar / coi.e) * ch.e * ch.e_bar * dd;
            v_bar += (coi.e / coi.e_bar) * ch.e * ch.e_bar * dd;
          }
      }
      out.r_v[l] += coi.e * v;
      out.r_v_bar[l] += coi.e_bar * v_bar;

      if (l > 0) {
        cplx tc{0.0, 0.0}, tt{0.0, 0.0};
        for (int k = -kK; k <= kK; ++k) {
          tc += intf.c.at(lag, k, k);
          tt += intf.c_tilde.at(lag, k, k);
        }
        out.isi[l] += kJ * coi.e * (ch.e * tc + ch.e_bar * tt);
      }
    }
  }

  // cross-channel diagonal-trace products
  for (const auto& a : t.interferers)
    for (const auto& b : t.interferers) {
      const Energies ea = energies(plan, a.channel);
      const Energies eb = energies(plan, b.channel);
      for (std::size_t l = 0; l <= lag_max; ++l) {
        const int lag = static_cast<int>(l);
        cplx cc{0.0, 0.0}, tt{0.0, 0.0}, ct{0.0, 0.0}, tc{0.0, 0.0};
        for (int n = -kN; n <= kN; ++n) {
          if (n == 0 || n == lag) continue;
          cplx ta_c{0.0, 0.0}, ta_t{0.0, 0.0}, tb_c{0.0, 0.0}, tb_t{0.0, 0.0};
          for (int k = -kK; k <= kK; ++k) {
            ta_c += a.c.at(n, k, k);
            ta_t += a.c_tilde.at(n, k, k);
            tb_c += b.c.at(n - lag, k, k);
            tb_t += b.c_tilde.at(n - lag, k, k);
          }
          cc += ta_c * std::conj(tb_c);
          tt += ta_t * std::conj(tb_t);
          ct += ta_c * std::conj(tb_t);
          tc += ta_t * std::conj(tb_c);
        }
        out.r_v[l] += coi.e * (ea.e * eb.e * cc + ea.e_bar * eb.e_bar * tt +
                               ea.e * eb.e_bar * ct + ea.e_bar * eb.e * tc);
        out.r_v_bar[l] +=
            coi.e_bar * (ea.e_bar * eb.e_bar * cc + ea.e * eb.e * tt +
                         ea.e_bar * eb.e * ct + ea.e * eb.e_bar * tc);
      }
    }
  return out;
}

double rel(double a, double b, double scale) { return std::abs(a - b) / scale; }

}  // namespace

TEST_CASE("analytic moments match a brute-force evaluation of the sums") {
  RpTensors tensors = small_tensors();
  WdmPlan plan = plan_3ch();
  // unequal cross-polarization energies and non-Gaussian fourth moments, so
  // every prefactor in the sums is exercised
  for (auto& ch : plan.channels) {
    ch.energy_bar = 0.7 * ch.energy;
    ch.fourth_moment = 1.8 * ch.energy * ch.energy;
    ch.fourth_moment_bar = 1.5 * ch.energy_bar * ch.energy_bar;
  }
  LinkConfig link;
  link.length_km = 40.0;

  const std::size_t lag_max = 6;
  MomentSet got = analytic_moments(tensors, plan, link, lag_max);
  RefMoments want = ref_moments(tensors, plan, lag_max);

  CHECK(rel(got.theta_mean, want.theta_mean, std::abs(want.theta_mean)) <
        1e-10);
  CHECK(rel(got.theta_bar_mean, want.theta_bar_mean,
            std::abs(want.theta_bar_mean)) < 1e-10);
  const double th0 = want.r_theta[0];
  const double v0 = std::abs(want.r_v[0]);
  REQUIRE(th0 > 0.0);
  REQUIRE(v0 > 0.0);
  for (std::size_t l = 0; l <= lag_max; ++l) {
    CHECK(rel(got.r_theta[l], want.r_theta[l], th0) < 1e-10);
    CHECK(rel(got.r_theta_bar[l], want.r_theta_bar[l], th0) < 1e-10);
    CHECK(rel(got.r_theta_cross[l], want.r_theta_cross[l], th0) < 1e-10);
    CHECK(std::abs(got.r_psi[l] - want.r_psi[l]) < 1e-10 * th0);
    CHECK(std::abs(got.r_v[l] - want.r_v[l]) < 1e-10 * v0);
    CHECK(std::abs(got.r_v_bar[l] - want.r_v_bar[l]) < 1e-10 * v0);
    CHECK(std::abs(got.isi_cross[l] - want.isi[l]) < 1e-10 * v0);
  }
  CHECK(got.isi_cross[0] == cplx{0.0, 0.0});
  CHECK(got.n_ase == link.ase_psd());
}

TEST_CASE("synchronized equal-energy Gaussian inputs obey the ratio identities") {
  RpTensors tensors = small_tensors();
  WdmPlan plan = plan_3ch();
  LinkConfig link;
  link.length_km = 40.0;
  MomentSet m = analytic_moments(tensors, plan, link, 6);
  REQUIRE(m.r_theta[0] > 0.0);
  for (std::size_t l = 0; l <= 6; ++l) {
    CHECK(rel(m.r_theta[l], m.r_theta_bar[l], m.r_theta[0]) < 1e-9);
    CHECK(rel(m.r_theta[l], 1.25 * m.r_theta_cross[l], m.r_theta[0]) < 1e-9);
    CHECK(std::abs(m.r_psi[l].real() - 0.2 * m.r_theta[l]) <
          1e-9 * m.r_theta[0]);
    // exactly real only on a transposition-closed k window; the stored
    // windows leave an edge-truncation residue in the imaginary part
    CHECK(std::abs(m.r_psi[l].imag()) < 1e-3 * m.r_theta[0]);
  }
}

TEST_CASE("silent interferers have vanishing moments") {
  RpTensors tensors = small_tensors();
  WdmPlan plan = plan_3ch();
  for (auto& ch : plan.channels)
    if (ch.index != 0) {
      ch.energy = 0.0;
      ch.energy_bar = 0.0;
      ch.fourth_moment = 0.0;
      ch.fourth_moment_bar = 0.0;
    }
  LinkConfig link;
  link.length_km = 40.0;
  MomentSet m = analytic_moments(tensors, plan, link, 6);
  CHECK(m.theta_mean == 0.0);
  for (std::size_t l = 0; l <= 6; ++l) {
    CHECK(m.r_theta[l] == 0.0);
    CHECK(m.r_theta_cross[l] == 0.0);
    CHECK(m.r_psi[l] == cplx{0.0, 0.0});
    CHECK(m.r_v[l] == cplx{0.0, 0.0});
    CHECK(m.isi_cross[l] == cplx{0.0, 0.0});
  }
}

TEST_CASE("moments scale with the input moments as the sums dictate") {
  RpTensors tensors = small_tensors();
  WdmPlan plan = plan_3ch();
  LinkConfig link;
  link.length_km = 40.0;
  LagContractions contr = precompute_moment_contractions(tensors, 4);
  MomentSet base = analytic_moments(contr, plan, link);

  WdmPlan doubled = plan;
  for (auto& ch : doubled.channels) {
    ch.energy *= 2.0;
    ch.energy_bar *= 2.0;
    ch.fourth_moment *= 4.0;
    ch.fourth_moment_bar *= 4.0;
  }
  MomentSet up = analytic_moments(contr, doubled, link);
  CHECK(rel(up.theta_mean, 2.0 * base.theta_mean, base.theta_mean) < 1e-12);
  for (std::size_t l = 0; l <= 4; ++l) {
    CHECK(rel(up.r_theta[l], 4.0 * base.r_theta[l], base.r_theta[0]) < 1e-12);
    CHECK(std::abs(up.r_psi[l] - 4.0 * base.r_psi[l]) < 1e-12 * base.r_theta[0]);
    CHECK(std::abs(up.r_v[l] - 8.0 * base.r_v[l]) <
          1e-12 * std::abs(base.r_v[0]));
  }

  // linearity in the fourth moment at fixed energy
  WdmPlan q1 = plan, q2 = plan;
  for (auto& ch : q1.channels) ch.fourth_moment *= 1.5;
  for (auto& ch : q2.channels) ch.fourth_moment *= 2.0;
  MomentSet m1 = analytic_moments(contr, q1, link);
  MomentSet m2 = analytic_moments(contr, q2, link);
  for (std::size_t l = 0; l <= 4; ++l)
    CHECK(rel(m2.r_theta[l] - base.r_theta[l],
              2.0 * (m1.r_theta[l] - base.r_theta[l]), base.r_theta[0]) <
          1e-12);
}

TEST_CASE("insufficient tensor memory for the requested lag is an error") {
  RpTensors tensors = small_tensors();  // decomposition index span is 6
  CHECK_THROWS_AS(precompute_moment_contractions(tensors, 16), Error);
  CHECK_NOTHROW(precompute_moment_contractions(tensors, 6));
}

TEST_CASE("wide-memory approximation: clamp, scaling, and validity flag") {
  WdmPlan plan = plan_3ch();
  plan.channels.erase(plan.channels.begin());  // keep channels 0 and +1 only
  LinkConfig link;
  link.length_km = 1000.0;

  LargeDispersionMoments m = large_dispersion_moments(plan, link);
  CHECK(m.approximation_valid);
  CHECK(m.theta_mean > 0.0);
  CHECK(m.r_theta[0] > 0.0);
  // support ends where the walk-off between the channels runs out
  const double span = std::abs(link.beta2() * 2.0 * kPi * 50e9) *
                      link.length() / kT;
  const auto lag_end = static_cast<std::size_t>(std::ceil(span));
  REQUIRE(m.r_theta.size() > lag_end);
  CHECK(m.r_theta[lag_end] == 0.0);
  CHECK(m.r_theta[lag_end / 2] > 0.0);

  WdmPlan doubled = plan;
  for (auto& ch : doubled.channels) {
    ch.energy *= 2.0;
    ch.energy_bar *= 2.0;
    ch.fourth_moment *= 4.0;
    ch.fourth_moment_bar *= 4.0;
  }
  LargeDispersionMoments up = large_dispersion_moments(doubled, link);
  CHECK(rel(up.theta_mean, 2.0 * m.theta_mean, m.theta_mean) < 1e-12);
  CHECK(rel(up.r_theta[0], 4.0 * m.r_theta[0], m.r_theta[0]) < 1e-12);

  LinkConfig short_link;
  short_link.length_km = 10.0;
  CHECK_FALSE(large_dispersion_moments(plan, short_link).approximation_valid);
}

TEST_CASE("empirical moments recover white synthetic sequences") {
  Rng rng(41);
  const std::size_t m = 512, nb = 64;
  const double var_th = 0.04, var_psi = 0.01, var_v = 2e-15;
  std::vector<NliDecomposition> decs(nb);
  for (auto& d : decs) {
    d.theta.resize(m);
    d.theta_bar.resize(m);
    d.psi.resize(m);
    d.v.resize(m);
    d.v_bar.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      d.theta[i] = std::sqrt(var_th) * rng.gaussian();
      d.theta_bar[i] = std::sqrt(var_th) * rng.gaussian();
      d.psi[i] = rng.cscg(var_psi);
      d.v[i] = rng.cscg(var_v);
      d.v_bar[i] = rng.cscg(var_v);
    }
  }
  MomentEstimate est = empirical_moments(decs, 4);
  CHECK_FALSE(est.degenerate);
  CHECK(std::abs(est.value.r_theta[0] - var_th) <
        3.0 * est.stderr_.r_theta[0]);
  CHECK(std::abs(est.value.r_psi[0].real() - var_psi) <
        3.0 * est.stderr_.r_psi[0].real());
  CHECK(std::abs(est.value.r_v[0].real() - var_v) <
        3.0 * est.stderr_.r_v[0].real());
  for (std::size_t l = 1; l <= 4; ++l) {
    CHECK(std::abs(est.value.r_theta[l]) < 3.0 * est.stderr_.r_theta[l]);
    CHECK(std::abs(est.value.r_psi[l].real()) <
          3.0 * est.stderr_.r_psi[l].real());
    CHECK(std::abs(est.value.r_v[l].imag()) < 3.0 * est.stderr_.r_v[l].imag());
  }
}

TEST_CASE("degenerate and invalid empirical inputs are handled") {
  NliDecomposition d;
  d.theta.assign(16, 0.25);
  d.theta_bar.assign(16, 0.25);
  d.psi.assign(16, cplx{0.1, 0.0});
  d.v.assign(16, cplx{0.0, 0.0});
  d.v_bar.assign(16, cplx{0.0, 0.0});
  std::vector<NliDecomposition> decs{d, d, d};
  MomentEstimate est = empirical_moments(decs, 2);
  CHECK(est.degenerate);
  CHECK(est.value.r_theta[0] == 0.0);
  CHECK(est.stderr_.r_theta[0] == 0.0);

  CHECK_THROWS_AS(empirical_moments({d}, 2), Error);
  CHECK_THROWS_AS(empirical_moments(decs, 16), Error);
}

TEST_CASE("Monte-Carlo decompositions agree with the analytic moments") {
  RpTensors tensors = small_tensors();
  WdmPlan plan = plan_3ch();
  LinkConfig link;
  link.length_km = 40.0;
  const std::size_t m = 256, nb = 200, lag_max = 6;
  RpEngine engine(tensors, m);
  Rng rng(42);
  std::vector<NliDecomposition> decs;
  decs.reserve(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    SymbolBlock coi = gaussian_symbols(m, kE, kE, rng);
    std::vector<SymbolBlock> intf;
    for (std::size_t i = 0; i < tensors.interferers.size(); ++i)
      intf.push_back(gaussian_symbols(m, kE, kE, rng));
    decs.push_back(engine.decompose(coi, intf, RpMode::Dbp));
  }
  MomentEstimate est = empirical_moments(decs, lag_max);
  MomentSet ana = analytic_moments(tensors, plan, link, lag_max);

  CHECK(std::abs(est.value.theta_mean - ana.theta_mean) <
        3.0 * est.stderr_.theta_mean);
  for (std::size_t l = 0; l <= lag_max; ++l) {
    CHECK(std::abs(est.value.r_theta[l] - ana.r_theta[l]) <
          3.0 * est.stderr_.r_theta[l]);
    CHECK(std::abs(est.value.r_theta_cross[l] - ana.r_theta_cross[l]) <
          3.0 * est.stderr_.r_theta_cross[l]);
    CHECK(std::abs(est.value.r_psi[l].real() - ana.r_psi[l].real()) <
          3.0 * est.stderr_.r_psi[l].real());
    CHECK(std::abs(est.value.r_v[l].real() - ana.r_v[l].real()) <
          3.0 * est.stderr_.r_v[l].real());
  }

  // the cross-polarization coupling is proper complex: its pseudo-correlation
  // vanishes
  for (std::size_t l = 0; l <= 2; ++l) {
    std::vector<double> re(nb), im(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      cplx acc{0.0, 0.0};
      for (std::size_t i = 0; i < m; ++i)
        acc += decs[b].psi[i] * decs[b].psi[(i + l) % m];
      re[b] = acc.real() / static_cast<double>(m);
      im[b] = acc.imag() / static_cast<double>(m);
    }
    auto mean_se = [&](const std::vector<double>& v) {
      double mu = 0.0;
      for (double x : v) mu += x;
      mu /= static_cast<double>(nb);
      double ss = 0.0;
      for (double x : v) ss += (x - mu) * (x - mu);
      return std::pair{mu, std::sqrt(ss / (static_cast<double>(nb) *
                                           (static_cast<double>(nb) - 1.0)))};
    };
    auto [mre, sre] = mean_se(re);
    auto [mim, sim] = mean_se(im);
    CHECK(std::abs(mre) < 3.0 * sre);
    CHECK(std::abs(mim) < 3.0 * sim);
  }
}

TEST_CASE("moment table exports as CSV") {
  RpTensors tensors = small_tensors();
  WdmPlan plan = plan_3ch();
  LinkConfig link;
  link.length_km = 40.0;
  MomentSet m = analytic_moments(tensors, plan, link, 3);
  std::string csv = moments_to_csv(m);
  CHECK(csv.rfind("lag,r_theta,r_theta_cross,re_r_psi,im_r_psi,re_r_v,im_r_v\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

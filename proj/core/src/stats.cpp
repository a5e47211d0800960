#include "dpwdm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace dpwdm {

namespace {

const cplx kJ{0.0, 1.0};

/// sum_k A(k) conj(B(k - lag)) over the overlap of two stored rows.
cplx row_corr(const NliTensor::Row& a, const NliTensor::Row& b, int lag) {
  if (a.values.empty() || b.values.empty()) return {0.0, 0.0};
  const int a_lo = a.k_start;
  const int a_hi = a.k_start + static_cast<int>(a.values.size()) - 1;
  const int b_lo = b.k_start + lag;
  const int b_hi = b.k_start + static_cast<int>(b.values.size()) - 1 + lag;
  const int lo = std::max(a_lo, b_lo);
  const int hi = std::min(a_hi, b_hi);
  cplx acc{0.0, 0.0};
  for (int k = lo; k <= hi; ++k)
    acc += a.values[static_cast<std::size_t>(k - a_lo)] *
           std::conj(b.values[static_cast<std::size_t>(k - b_lo)]);
  return acc;
}

const NliTensor::Row* find_row(const NliTensor& t, int n, int delta) {
  auto it = t.rows.find({n, delta});
  return it == t.rows.end() ? nullptr : &it->second;
}

/// sum over all deltas of row_corr between the n_a rows of A and the n_b rows
/// of B.
cplx pair_full(const NliTensor& a, const NliTensor& b, int n_a, int n_b,
               int lag) {
  cplx acc{0.0, 0.0};
  for (const auto& [key, row] : a.rows) {
    if (key.first != n_a) continue;
    if (const auto* other = find_row(b, n_b, key.second))
      acc += row_corr(row, *other, lag);
  }
  return acc;
}

cplx pair_diag(const NliTensor& a, const NliTensor& b, int n_a, int n_b,
               int lag) {
  const auto* ra = find_row(a, n_a, 0);
  const auto* rb = find_row(b, n_b, 0);
  if (!ra || !rb) return {0.0, 0.0};
  return row_corr(*ra, *rb, lag);
}

void n_span(const NliTensor& t, int& lo, int& hi) {
  for (const auto& [key, row] : t.rows) {
    lo = std::min(lo, key.first);
    hi = std::max(hi, key.first);
  }
}

std::map<int, cplx> diag_traces(const NliTensor& t) {
  std::map<int, cplx> out;
  for (const auto& [key, row] : t.rows) {
    if (key.second != 0) continue;
    cplx acc{0.0, 0.0};
    for (const auto& v : row.values) acc += v;
    out[key.first] = acc;
  }
  return out;
}

/// sum over n != 0, n != lag of t_a[n] conj(t_b[n - lag]).
cplx trace_corr(const std::map<int, cplx>& ta, const std::map<int, cplx>& tb,
                int lag) {
  cplx acc{0.0, 0.0};
  for (const auto& [n, v] : ta) {
    if (n == 0 || n == lag) continue;
    auto it = tb.find(n - lag);
    if (it != tb.end()) acc += v * std::conj(it->second);
  }
  return acc;
}

struct ChannelMoments {
  double e, e_bar, q, q_bar;
};

ChannelMoments channel_moments(const WdmPlan& plan, int channel) {
  if (!plan.has_channel(channel))
    throw Error("analytic_moments: plan has no channel " +
                std::to_string(channel));
  const WdmChannel& ch = plan.channel(channel);
  return {ch.energy, ch.energy_bar, ch.fourth_moment, ch.fourth_moment_bar};
}

double jackknife_se(const std::vector<double>& per_block) {
  const auto b = static_cast<double>(per_block.size());
  double mean = 0.0;
  for (double v : per_block) mean += v;
  mean /= b;
  // the statistics are plain averages over blocks, so the leave-one-out
  // jackknife reduces to the usual standard error of the mean
  double ss = 0.0;
  for (double v : per_block) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (b * (b - 1.0)));
}

double block_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

cplx MomentSet::r_z(std::size_t lag) const {
  cplx v = lag < r_v.size() ? r_v[lag] : cplx{0.0, 0.0};
  if (lag == 0) v += n_ase;
  return v;
}

cplx MomentSet::r_z_bar(std::size_t lag) const {
  cplx v = lag < r_v_bar.size() ? r_v_bar[lag] : cplx{0.0, 0.0};
  if (lag == 0) v += n_ase;
  return v;
}

LagContractions precompute_moment_contractions(const RpTensors& tensors,
                                               std::size_t lag_max) {
  if (tensors.interferers.empty())
    return LagContractions{{}, lag_max};

  int n_lo = 0, n_hi = 0;
  for (const auto& intf : tensors.interferers) {
    n_span(intf.c, n_lo, n_hi);
    n_span(intf.c_tilde, n_lo, n_hi);
    n_span(intf.d, n_lo, n_hi);
  }
  if (static_cast<std::size_t>(n_hi - n_lo) < lag_max)
    throw Error(
        "precompute_moment_contractions: lag " + std::to_string(lag_max) +
        " needs a decomposition-index span of at least that many symbols; "
        "rebuild the tensors with n_max >= " +
        std::to_string((lag_max + 1) / 2));

  LagContractions out;
  out.lag_max = lag_max;
  const std::size_t nl = lag_max + 1;
  for (const auto& intf : tensors.interferers) {
    LagContractions::PerChannel pc;
    pc.channel = intf.channel;
    for (auto* v : {&pc.th_cc_diag, &pc.th_cc_full, &pc.th_tt_diag,
                    &pc.th_tt_full, &pc.th_ct_diag, &pc.th_ct_full,
                    &pc.th_tc_diag, &pc.th_tc_full, &pc.psi_dd_full,
                    &pc.v_cc_diag, &pc.v_cc_full, &pc.v_tt_diag, &pc.v_tt_full,
                    &pc.v_dd_full})
      v->assign(nl, cplx{0.0, 0.0});

    for (std::size_t l = 0; l < nl; ++l) {
      const int lag = static_cast<int>(l);
      pc.th_cc_diag[l] = pair_diag(intf.c, intf.c, 0, 0, lag);
      pc.th_cc_full[l] = pair_full(intf.c, intf.c, 0, 0, lag);
      pc.th_tt_diag[l] = pair_diag(intf.c_tilde, intf.c_tilde, 0, 0, lag);
      pc.th_tt_full[l] = pair_full(intf.c_tilde, intf.c_tilde, 0, 0, lag);
      pc.th_ct_diag[l] = pair_diag(intf.c, intf.c_tilde, 0, 0, lag);
      pc.th_ct_full[l] = pair_full(intf.c, intf.c_tilde, 0, 0, lag);
      pc.th_tc_diag[l] = pair_diag(intf.c_tilde, intf.c, 0, 0, lag);
      pc.th_tc_full[l] = pair_full(intf.c_tilde, intf.c, 0, 0, lag);
      pc.psi_dd_full[l] = pair_full(intf.d, intf.d, 0, 0, lag);
      for (int n = n_lo; n <= n_hi; ++n) {
        if (n == 0 || n == lag) continue;
        pc.v_cc_diag[l] += pair_diag(intf.c, intf.c, n, n - lag, lag);
        pc.v_cc_full[l] += pair_full(intf.c, intf.c, n, n - lag, lag);
        pc.v_tt_diag[l] +=
            pair_diag(intf.c_tilde, intf.c_tilde, n, n - lag, lag);
        pc.v_tt_full[l] +=
            pair_full(intf.c_tilde, intf.c_tilde, n, n - lag, lag);
        pc.v_dd_full[l] += pair_full(intf.d, intf.d, n, n - lag, lag);
      }
    }
    pc.trace_c = diag_traces(intf.c);
    pc.trace_t = diag_traces(intf.c_tilde);
    out.channels.push_back(std::move(pc));
  }
  return out;
}

MomentSet analytic_moments(const LagContractions& contractions,
                           const WdmPlan& plan, const LinkConfig& link) {
  const std::size_t nl = contractions.lag_max + 1;
  MomentSet m;
  m.r_theta.assign(nl, 0.0);
  m.r_theta_bar.assign(nl, 0.0);
  m.r_theta_cross.assign(nl, 0.0);
  m.r_psi.assign(nl, cplx{0.0, 0.0});
  m.r_v.assign(nl, cplx{0.0, 0.0});
  m.r_v_bar.assign(nl, cplx{0.0, 0.0});
  m.isi_cross.assign(nl, cplx{0.0, 0.0});
  m.n_ase = link.ase_psd();

  const ChannelMoments coi = channel_moments(plan, 0);

  cplx mean{0.0, 0.0}, mean_bar{0.0, 0.0};
  for (const auto& pc : contractions.channels) {
    const ChannelMoments ch = channel_moments(plan, pc.channel);
    auto t0c = pc.trace_c.count(0) ? pc.trace_c.at(0) : cplx{0.0, 0.0};
    auto t0t = pc.trace_t.count(0) ? pc.trace_t.at(0) : cplx{0.0, 0.0};
    mean += ch.e * t0c + ch.e_bar * t0t;
    mean_bar += ch.e_bar * t0c + ch.e * t0t;

    for (std::size_t l = 0; l < nl; ++l) {
      const cplx cc_off = pc.th_cc_full[l] - pc.th_cc_diag[l];
      const cplx tt_off = pc.th_tt_full[l] - pc.th_tt_diag[l];
      const cplx ct_off = pc.th_ct_full[l] - pc.th_ct_diag[l];
      const cplx tc_off = pc.th_tc_full[l] - pc.th_tc_diag[l];
      const double qe = ch.q - ch.e * ch.e;
      const double qe_bar = ch.q_bar - ch.e_bar * ch.e_bar;

      m.r_theta[l] += (qe * pc.th_cc_diag[l] + ch.e * ch.e * cc_off +
                       qe_bar * pc.th_tt_diag[l] + ch.e_bar * ch.e_bar * tt_off)
                          .real();
      m.r_theta_bar[l] +=
          (qe_bar * pc.th_cc_diag[l] + ch.e_bar * ch.e_bar * cc_off +
           qe * pc.th_tt_diag[l] + ch.e * ch.e * tt_off)
              .real();
      m.r_theta_cross[l] +=
          (qe * pc.th_ct_diag[l] + ch.e * ch.e * ct_off +
           qe_bar * pc.th_tc_diag[l] + ch.e_bar * ch.e_bar * tc_off)
              .real();
      m.r_psi[l] += ch.e * ch.e_bar * pc.psi_dd_full[l];

      const cplx v_cc_off = pc.v_cc_full[l] - pc.v_cc_diag[l];
      const cplx v_tt_off = pc.v_tt_full[l] - pc.v_tt_diag[l];
      m.r_v[l] += coi.e * (qe * pc.v_cc_diag[l] + ch.e * ch.e * v_cc_off +
                           qe_bar * pc.v_tt_diag[l] +
                           ch.e_bar * ch.e_bar * v_tt_off) +
                  coi.e_bar * ch.e * ch.e_bar * pc.v_dd_full[l];
      m.r_v_bar[l] +=
          coi.e_bar * (qe_bar * pc.v_cc_diag[l] + ch.e_bar * ch.e_bar * v_cc_off +
                       qe * pc.v_tt_diag[l] + ch.e * ch.e * v_tt_off) +
          coi.e * ch.e * ch.e_bar * pc.v_dd_full[l];

      if (l > 0) {
        const int lag = static_cast<int>(l);
        auto tc = pc.trace_c.count(lag) ? pc.trace_c.at(lag) : cplx{0.0, 0.0};
        auto tt = pc.trace_t.count(lag) ? pc.trace_t.at(lag) : cplx{0.0, 0.0};
        m.isi_cross[l] += kJ * coi.e * (ch.e * tc + ch.e_bar * tt);
      }
    }
  }
  m.theta_mean = mean.real();
  m.theta_bar_mean = mean_bar.real();

  // cross-channel products of the diagonal traces
  for (const auto& a : contractions.channels) {
    const ChannelMoments ca = channel_moments(plan, a.channel);
    for (const auto& b : contractions.channels) {
      const ChannelMoments cb = channel_moments(plan, b.channel);
      for (std::size_t l = 0; l < nl; ++l) {
        const int lag = static_cast<int>(l);
        const cplx cc = trace_corr(a.trace_c, b.trace_c, lag);
        const cplx tt = trace_corr(a.trace_t, b.trace_t, lag);
        const cplx ct = trace_corr(a.trace_c, b.trace_t, lag);
        const cplx tc = trace_corr(a.trace_t, b.trace_c, lag);
        m.r_v[l] += coi.e * (ca.e * cb.e * cc + ca.e_bar * cb.e_bar * tt +
                             ca.e * cb.e_bar * ct + ca.e_bar * cb.e * tc);
        m.r_v_bar[l] +=
            coi.e_bar * (ca.e_bar * cb.e_bar * cc + ca.e * cb.e * tt +
                         ca.e_bar * cb.e * ct + ca.e * cb.e_bar * tc);
      }
    }
  }
  return m;
}

MomentSet analytic_moments(const RpTensors& tensors, const WdmPlan& plan,
                           const LinkConfig& link, std::size_t lag_max) {
  return analytic_moments(precompute_moment_contractions(tensors, lag_max),
                          plan, link);
}

LargeDispersionMoments large_dispersion_moments(const WdmPlan& plan,
                                                const LinkConfig& link,
                                                std::size_t lag_max) {
  const double t_sym = plan.symbol_period;
  const double length = link.length();
  const double gamma = link.gamma();
  const double beta2 = link.beta2();
  const double f0 = plan.channel(0).center_freq;

  LargeDispersionMoments out;
  double max_span = 0.0;
  for (const auto& ch : plan.channels) {
    if (ch.index == 0) continue;
    // center_freq already carries the angular offset
    const double omega = ch.center_freq - f0;
    const double span = std::abs(beta2 * omega) * length / t_sym;
    max_span = std::max(max_span, span);
    if (span < 10.0) out.approximation_valid = false;
    out.theta_mean += 3.0 * gamma * (length / t_sym) * ch.energy;
  }
  if (lag_max == 0)
    lag_max = static_cast<std::size_t>(std::ceil(max_span)) + 1;
  out.r_theta.assign(lag_max + 1, 0.0);
  for (const auto& ch : plan.channels) {
    if (ch.index == 0) continue;
    const double omega = ch.center_freq - f0;
    const double walkoff = std::abs(beta2 * omega);
    const double qe = ch.fourth_moment - ch.energy * ch.energy;
    for (std::size_t l = 0; l <= lag_max; ++l) {
      const double frac =
          1.0 - static_cast<double>(l) * t_sym / (walkoff * length);
      if (frac > 0.0)
        out.r_theta[l] +=
            5.0 * gamma * gamma * length / t_sym * qe / walkoff * frac;
    }
  }
  return out;
}

MomentEstimate empirical_moments(
    const std::vector<NliDecomposition>& decompositions, std::size_t lag_max) {
  const std::size_t nb = decompositions.size();
  if (nb < 2)
    throw Error("empirical_moments: need at least 2 blocks");
  const std::size_t m = decompositions.front().size();
  if (lag_max >= m)
    throw Error("empirical_moments: lag exceeds the block length");
  for (const auto& d : decompositions)
    if (d.size() != m)
      throw Error("empirical_moments: blocks have different lengths");

  const std::size_t nl = lag_max + 1;
  // per-block values for every scalar statistic
  std::vector<double> b_mean(nb), b_mean_bar(nb);
  std::vector<std::vector<double>> b_rt(nl, std::vector<double>(nb)),
      b_rtb(nl, std::vector<double>(nb)), b_rtx(nl, std::vector<double>(nb)),
      b_rp_re(nl, std::vector<double>(nb)), b_rp_im(nl, std::vector<double>(nb)),
      b_rv_re(nl, std::vector<double>(nb)), b_rv_im(nl, std::vector<double>(nb)),
      b_rvb_re(nl, std::vector<double>(nb)),
      b_rvb_im(nl, std::vector<double>(nb));

  // Center on the global mean: per-block centering would bias the
  // autocovariances by O(memory / block length), which the jackknife errors
  // do not cover at large sample counts.
  double mu = 0.0, mu_bar = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const NliDecomposition& d = decompositions[b];
    double s = 0.0, s_bar = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      s += d.theta[i];
      s_bar += d.theta_bar[i];
    }
    b_mean[b] = s / static_cast<double>(m);
    b_mean_bar[b] = s_bar / static_cast<double>(m);
    mu += b_mean[b];
    mu_bar += b_mean_bar[b];
  }
  mu /= static_cast<double>(nb);
  mu_bar /= static_cast<double>(nb);

  for (std::size_t b = 0; b < nb; ++b) {
    const NliDecomposition& d = decompositions[b];
    for (std::size_t l = 0; l < nl; ++l) {
      double rt = 0.0, rtb = 0.0, rtx = 0.0;
      cplx rp{0.0, 0.0}, rv{0.0, 0.0}, rvb{0.0, 0.0};
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t il = (i + l) % m;  // cyclic blocks
        rt += (d.theta[i] - mu) * (d.theta[il] - mu);
        rtb += (d.theta_bar[i] - mu_bar) * (d.theta_bar[il] - mu_bar);
        rtx += (d.theta[i] - mu) * (d.theta_bar[il] - mu_bar);
        rp += d.psi[i] * std::conj(d.psi[il]);
        rv += d.v[i] * std::conj(d.v[il]);
        rvb += d.v_bar[i] * std::conj(d.v_bar[il]);
      }
      const double inv = 1.0 / static_cast<double>(m);
      b_rt[l][b] = rt * inv;
      b_rtb[l][b] = rtb * inv;
      b_rtx[l][b] = rtx * inv;
      b_rp_re[l][b] = rp.real() * inv;
      b_rp_im[l][b] = rp.imag() * inv;
      b_rv_re[l][b] = rv.real() * inv;
      b_rv_im[l][b] = rv.imag() * inv;
      b_rvb_re[l][b] = rvb.real() * inv;
      b_rvb_im[l][b] = rvb.imag() * inv;
    }
  }

  MomentEstimate est;
  auto fill = [&](MomentSet& ms, auto pick) {
    ms.theta_mean = pick(b_mean);
    ms.theta_bar_mean = pick(b_mean_bar);
    ms.r_theta.resize(nl);
    ms.r_theta_bar.resize(nl);
    ms.r_theta_cross.resize(nl);
    ms.r_psi.resize(nl);
    ms.r_v.resize(nl);
    ms.r_v_bar.resize(nl);
    ms.isi_cross.assign(nl, cplx{0.0, 0.0});
    for (std::size_t l = 0; l < nl; ++l) {
      ms.r_theta[l] = pick(b_rt[l]);
      ms.r_theta_bar[l] = pick(b_rtb[l]);
      ms.r_theta_cross[l] = pick(b_rtx[l]);
      ms.r_psi[l] = {pick(b_rp_re[l]), pick(b_rp_im[l])};
      ms.r_v[l] = {pick(b_rv_re[l]), pick(b_rv_im[l])};
      ms.r_v_bar[l] = {pick(b_rvb_re[l]), pick(b_rvb_im[l])};
    }
  };
  fill(est.value, block_mean);
  fill(est.stderr_, jackknife_se);

  double spread = 0.0;
  for (double v : b_rt[0])
    spread = std::max(spread, std::abs(v - b_rt[0][0]));
  est.degenerate = spread == 0.0;
  return est;
}

std::string moments_to_csv(const MomentSet& m) {
  std::ostringstream os;
  os.precision(17);
  os << "lag,r_theta,r_theta_cross,re_r_psi,im_r_psi,re_r_v,im_r_v\n";
  for (std::size_t l = 0; l < m.lag_count(); ++l)
    os << l << ',' << m.r_theta[l] << ',' << m.r_theta_cross[l] << ','
       << m.r_psi[l].real() << ',' << m.r_psi[l].imag() << ','
       << m.r_v[l].real() << ',' << m.r_v[l].imag() << '\n';
  return os.str();
}

}  // namespace dpwdm

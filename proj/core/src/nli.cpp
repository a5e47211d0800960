#include "dpwdm/nli.hpp"

#include <algorithm>
#include <cmath>

#include "dpwdm/fft.hpp"
#include "dpwdm/hash.hpp"

namespace dpwdm {

namespace {

// 8-point Gauss-Legendre abscissae and weights on [-1, 1].
constexpr std::array<double, 4> kGlX = {0.1834346424956498, 0.5255324099163290,
                                        0.7966664774136267, 0.9602898564975363};
constexpr std::array<double, 4> kGlW = {0.3626837833783620, 0.3137066458778873,
                                        0.2223810344533745, 0.1012285362903763};

struct ZNode {
  double z, weight;
};

std::vector<ZNode> gl_nodes(double length, int panels, int gl_points) {
  if (gl_points != 8) throw Error("nli: only 8-point Gauss-Legendre supported");
  std::vector<ZNode> nodes;
  nodes.reserve(static_cast<std::size_t>(panels) * 8);
  const double h = length / panels;
  for (int p = 0; p < panels; ++p) {
    double mid = (p + 0.5) * h;
    for (int i = 0; i < 4; ++i) {
      nodes.push_back({mid - 0.5 * h * kGlX[i], 0.5 * h * kGlW[i]});
      nodes.push_back({mid + 0.5 * h * kGlX[i], 0.5 * h * kGlW[i]});
    }
  }
  return nodes;
}

/// Shift specification of one tensor build. The second and third pulse delays
/// may follow the inter-channel walk-off, t(z) = constant + rate * z.
struct ShiftSpec {
  double t1 = 0.0;
  double t2_const = 0.0, t3_const = 0.0;
  double walkoff_rate = 0.0;  // -beta2 * Omega_c; applied to both t2 and t3
  double factor = 1.0;        // overall multiplier (2 for the C tensor)
};

ShiftSpec shift_spec(TensorKind kind, const LinkConfig& link,
                     const WdmPlan& plan, int c, double pol_delay) {
  ShiftSpec s;
  switch (kind) {
    case TensorKind::SelfSpm:
      break;
    case TensorKind::CrossSpm:
      s.t2_const = s.t3_const = pol_delay;
      break;
    case TensorKind::SelfXpm: {
      const WdmChannel& ch = plan.channel(c);
      s.t2_const = s.t3_const = ch.delay;
      s.walkoff_rate = -link.beta2() * ch.center_freq;
      s.factor = 2.0;
      break;
    }
    case TensorKind::CrossXpm: {
      const WdmChannel& ch = plan.channel(c);
      s.t2_const = s.t3_const = ch.delay_bar;
      s.walkoff_rate = -link.beta2() * ch.center_freq;
      break;
    }
    case TensorKind::MixedXpm: {
      const WdmChannel& ch = plan.channel(c);
      s.t1 = plan.channel(0).delay_bar;
      s.t2_const = ch.delay;
      s.t3_const = ch.delay_bar;
      s.walkoff_rate = -link.beta2() * ch.center_freq;
      break;
    }
  }
  return s;
}

struct BuildGeometry {
  int n_max, dk, k_min, k_max;
  std::size_t grid_n;
  double dt;
  int ovs;
};

BuildGeometry make_geometry(const LinkConfig& link, const WdmPlan& plan,
                            const QuadratureSettings& quad, const ShiftSpec& s,
                            int k_min, int k_max) {
  BuildGeometry g;
  g.n_max = quad.n_max;
  g.dk = quad.dk_max > 0 ? quad.dk_max : quad.n_max + 8;
  g.k_min = k_min;
  g.k_max = k_max;
  g.ovs = quad.oversampling;
  const double T = plan.symbol_period;
  g.dt = T / g.ovs;

  const double spread = std::abs(link.beta2()) * (kPi / T) * link.length();
  const double margin = quad.margin_symbols * T;
  const double width_p = 2.0 * spread + g.n_max * T + std::abs(s.t1) + 2.0 * margin;
  const double width_q = 2.0 * spread + g.dk * T +
                         std::abs(s.t3_const - s.t2_const) + 2.0 * margin;
  const double read_span = static_cast<double>(k_max - k_min) * T;
  const double min_span = width_p + width_q + read_span;
  // The grid period must be a whole multiple of 2T so the band edge +-pi/T
  // falls exactly on a bin; the midpoint edge weight then cancels the leading
  // wrap-around term of the slowly decaying pulse tails. Misaligned grids
  // plateau near 1e-3 relative error no matter how large the margin.
  auto cells = static_cast<std::size_t>(std::ceil(min_span / (2.0 * T)));
  g.grid_n = 2 * static_cast<std::size_t>(g.ovs) * next_fft_friendly(cells);
  return g;
}

int auto_panels(const LinkConfig& link, const WdmPlan& plan,
                const ShiftSpec& s, const QuadratureSettings& quad) {
  if (quad.initial_panels > 0) return quad.initial_panels;
  const double w = 2.0 * kPi / plan.symbol_period;
  double rate = std::abs(link.beta2()) * w * w / 2.0 + std::abs(s.walkoff_rate) * w;
  double periods = rate * link.length() / (2.0 * kPi);
  return std::max(8, static_cast<int>(std::ceil(periods / 2.0)) + 4);
}

/// Accumulator of one tensor build: flat (n, delta, k) array of sums.
struct RowsAcc {
  const BuildGeometry* g;
  std::vector<cplx> data;

  explicit RowsAcc(const BuildGeometry& geom) : g(&geom) {
    std::size_t nn = 2 * g->n_max + 1, nd = 2 * g->dk + 1;
    std::size_t nk = static_cast<std::size_t>(g->k_max - g->k_min + 1);
    data.assign(nn * nd * nk, cplx{0.0, 0.0});
  }
  std::size_t nk() const { return static_cast<std::size_t>(g->k_max - g->k_min + 1); }
  cplx* row(int n, int delta) {
    std::size_t nd = 2 * g->dk + 1;
    std::size_t idx =
        (static_cast<std::size_t>(n + g->n_max) * nd + (delta + g->dk)) * nk();
    return data.data() + idx;
  }
  void add(const RowsAcc& other) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
  }
};

/// Adds the contribution of the z nodes in [first, last) to the accumulator.
/// Every pulse shift is realized as an exact spectral phase on the rect
/// spectrum sqrt(T) * 1(|w| <= pi/T) * exp(j beta2 w^2 z / 2).
void accumulate_nodes(const LinkConfig& link, const WdmPlan& plan,
                      const ShiftSpec& s, const BuildGeometry& g,
                      const std::vector<ZNode>& nodes, std::size_t first,
                      std::size_t last, RowsAcc& acc) {
  const double T = plan.symbol_period;
  const std::size_t n = g.grid_n;
  const double dt = g.dt;
  const double beta2 = link.beta2();
  const double gamma = link.gamma();
  const double sqrt_t = std::sqrt(T);
  const double band_edge = kPi / T;
  // Bins exactly on the band edge take the midpoint value sqrt(T)/2; the
  // tolerance only absorbs rounding in the bin frequencies, so bins strictly
  // inside (e.g. on grids where the edge falls between bins) keep full weight.
  const double edge_tol = 1e-9 * band_edge;

  // Band bins and their angular frequencies (contiguous in FFT layout:
  // non-negative then negative frequencies).
  std::vector<std::size_t> bins;
  std::vector<double> omega, amp;
  for (std::size_t i = 0; i < n; ++i) {
    double w = fft_omega(i, n, dt);
    double aw = std::abs(w);
    if (aw > band_edge + edge_tol) continue;
    bins.push_back(i);
    omega.push_back(w);
    amp.push_back(aw > band_edge - edge_tol ? 0.5 * sqrt_t : sqrt_t);
  }

  const int nn = 2 * g.n_max + 1;
  const int ndl = 2 * g.dk + 1;

  std::vector<cplx> spec(n), s0(n), sb(n), work(n), prod(n);
  std::vector<std::vector<cplx>> p_hat(nn, std::vector<cplx>(n));
  std::vector<std::vector<cplx>> q_hat(ndl, std::vector<cplx>(n));

  auto to_time = [&](std::vector<cplx>& v) {
    ifft(v);
    double inv_dt = 1.0 / dt;
    for (auto& x : v) x *= inv_dt;
  };

  for (std::size_t node = first; node < last; ++node) {
    const double z = nodes[node].z;
    const double t2 = s.t2_const + s.walkoff_rate * z;
    const double t3 = s.t3_const + s.walkoff_rate * z;

    // Base dispersed spectrum at this z.
    std::vector<cplx> base(bins.size());
    for (std::size_t b = 0; b < bins.size(); ++b)
      base[b] = amp[b] * std::polar(1.0, 0.5 * beta2 * omega[b] * omega[b] * z);

    auto build_pulse = [&](double delay, std::vector<cplx>& out) {
      std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
      for (std::size_t b = 0; b < bins.size(); ++b)
        out[bins[b]] = base[b] * std::polar(1.0, -omega[b] * delay);
      to_time(out);
    };

    build_pulse(0.0, s0);
    for (int ni = -g.n_max; ni <= g.n_max; ++ni) {
      build_pulse(ni * T + s.t1, work);
      auto& dst = p_hat[ni + g.n_max];
      for (std::size_t i = 0; i < n; ++i) dst[i] = std::conj(s0[i]) * work[i];
      fft(dst);
    }
    build_pulse(t2, sb);
    for (int dl = -g.dk; dl <= g.dk; ++dl) {
      build_pulse(dl * T + t3, work);
      auto& dst = q_hat[dl + g.dk];
      for (std::size_t i = 0; i < n; ++i) dst[i] = sb[i] * std::conj(work[i]);
      fft(dst);
    }

    const double w_total = gamma * s.factor * nodes[node].weight * dt;
    for (int ni = 0; ni < nn; ++ni) {
      const auto& ph = p_hat[ni];
      for (int dl = 0; dl < ndl; ++dl) {
        const auto& qh = q_hat[dl];
        prod[0] = ph[0] * qh[0];
        for (std::size_t f = 1; f < n; ++f) prod[f] = ph[f] * qh[n - f];
        ifft(prod);  // prod[l] = sum_i P[i] Q[i - l]
        cplx* dst = acc.row(ni - g.n_max, dl - g.dk);
        for (int k = g.k_min; k <= g.k_max; ++k) {
          long idx = static_cast<long>(k) * g.ovs;
          idx %= static_cast<long>(n);
          if (idx < 0) idx += static_cast<long>(n);
          dst[k - g.k_min] += w_total * prod[static_cast<std::size_t>(idx)];
        }
      }
    }
  }
}

RowsAcc run_nodes(const LinkConfig& link, const WdmPlan& plan,
                  const ShiftSpec& s, const BuildGeometry& g,
                  const std::vector<ZNode>& nodes, unsigned threads) {
  unsigned nt = detail::resolve_threads(threads);
  nt = std::min<unsigned>(nt, static_cast<unsigned>(nodes.size()));
  if (nt <= 1) {
    RowsAcc acc(g);
    accumulate_nodes(link, plan, s, g, nodes, 0, nodes.size(), acc);
    return acc;
  }
  std::vector<RowsAcc> partial(nt, RowsAcc(g));
  parallel_for(
      nt,
      [&](std::size_t t) {
        std::size_t lo = nodes.size() * t / nt;
        std::size_t hi = nodes.size() * (t + 1) / nt;
        accumulate_nodes(link, plan, s, g, nodes, lo, hi, partial[t]);
      },
      nt);
  RowsAcc acc = std::move(partial[0]);
  for (unsigned t = 1; t < nt; ++t) acc.add(partial[t]);
  return acc;
}

double max_abs(const RowsAcc& acc) {
  double m = 0.0;
  for (const auto& v : acc.data) m = std::max(m, std::abs(v));
  return m;
}

double max_diff(const RowsAcc& a, const RowsAcc& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

/// Probe geometry: a thin slice of the full build used to pick the panel
/// count. It keeps the whole k range (the z integrand localizes differently
/// across the walk-off window) but only |n|, |k'-k| <= 1, and shares the full
/// time grid so its convergence transfers.
BuildGeometry probe_geometry(const BuildGeometry& g) {
  BuildGeometry p = g;
  p.n_max = std::min(g.n_max, 1);
  p.dk = std::min(g.dk, 1);
  return p;
}

int converge_panels(const LinkConfig& link, const WdmPlan& plan,
                    const ShiftSpec& s, const BuildGeometry& g,
                    const QuadratureSettings& quad, int initial,
                    double* est_err = nullptr) {
  BuildGeometry pg = probe_geometry(g);
  int panels = initial;
  RowsAcc prev =
      run_nodes(link, plan, s, pg, gl_nodes(link.length(), panels, quad.gl_points),
                quad.threads);
  while (true) {
    int next = 2 * panels;
    RowsAcc cur = run_nodes(link, plan, s, pg,
                            gl_nodes(link.length(), next, quad.gl_points),
                            quad.threads);
    double scale = std::max(max_abs(cur), 1e-300);
    double rel = max_diff(prev, cur) / scale;
    if (rel < quad.z_tol) {
      if (est_err) *est_err = rel;
      return next;
    }
    if (next > quad.max_panels) {
      if (est_err) {
        *est_err = rel;
        return next;
      }
      throw Error("nli: z quadrature did not converge; estimated relative "
                  "error " + std::to_string(rel) + " at " +
                  std::to_string(next) + " panels");
    }
    panels = next;
    prev = std::move(cur);
  }
}

NliTensor finalize(const LinkConfig& link, const WdmPlan& plan,
                   const QuadratureSettings& quad, TensorKind kind, int c,
                   const BuildGeometry& g, RowsAcc&& acc) {
  NliTensor t;
  t.kind = kind;
  t.channel = c;
  t.settings = quad;
  t.provenance_key = tensor_provenance_key(link, plan, quad, kind, c);
  const std::size_t nk = acc.nk();
  for (int n = -g.n_max; n <= g.n_max; ++n)
    for (int dl = -g.dk; dl <= g.dk; ++dl) {
      const cplx* src = acc.row(n, dl);
      NliTensor::Row row;
      row.k_start = g.k_min;
      row.values.assign(src, src + nk);
      t.rows.emplace(std::make_pair(n, dl), std::move(row));
    }
  t.prune(quad.drop_threshold);
  return t;
}

NliTensor build_tensor(const LinkConfig& link, const WdmPlan& plan,
                       const QuadratureSettings& quad, TensorKind kind, int c,
                       double pol_delay, int panels_hint = 0) {
  link.validate();
  plan.validate();
  quad.validate();
  ShiftSpec s = shift_spec(kind, link, plan, c, pol_delay);
  auto [k_min, k_max] = resolve_k_range(link, plan, quad, kind, c);
  BuildGeometry g = make_geometry(link, plan, quad, s, k_min, k_max);
  int panels = panels_hint > 0
                   ? panels_hint
                   : converge_panels(link, plan, s, g, quad,
                                     auto_panels(link, plan, s, quad));
  RowsAcc acc = run_nodes(link, plan, s, g,
                          gl_nodes(link.length(), panels, quad.gl_points),
                          quad.threads);
  return finalize(link, plan, quad, kind, c, g, std::move(acc));
}

}  // namespace

const char* tensor_kind_name(TensorKind kind) {
  switch (kind) {
    case TensorKind::SelfSpm: return "S";
    case TensorKind::CrossSpm: return "S~";
    case TensorKind::SelfXpm: return "C";
    case TensorKind::CrossXpm: return "C~";
    case TensorKind::MixedXpm: return "D";
  }
  return "?";
}

void QuadratureSettings::validate() const {
  if (n_max < 0) throw Error("QuadratureSettings: n_max must be >= 0");
  if (oversampling < 3)
    throw Error("QuadratureSettings: oversampling must be >= 3 (pulse products "
                "span twice the signal band)");
  if (k_min > k_max) throw Error("QuadratureSettings: k_min > k_max");
  if (z_tol <= 0.0) throw Error("QuadratureSettings: z_tol must be > 0");
  if (drop_threshold < 0.0)
    throw Error("QuadratureSettings: drop_threshold must be >= 0");
  if (gl_points != 8) throw Error("QuadratureSettings: gl_points must be 8");
}

cplx NliTensor::at(int n, int k, int kprime) const {
  auto it = rows.find(std::make_pair(n, kprime - k));
  if (it == rows.end()) return {0.0, 0.0};
  const Row& row = it->second;
  long idx = static_cast<long>(k) - row.k_start;
  if (idx < 0 || idx >= static_cast<long>(row.values.size())) return {0.0, 0.0};
  return row.values[static_cast<std::size_t>(idx)];
}

std::size_t NliTensor::entry_count() const {
  std::size_t c = 0;
  for (const auto& [key, row] : rows) c += row.values.size();
  return c;
}

double NliTensor::peak_abs() const {
  double m = 0.0;
  for (const auto& [key, row] : rows)
    for (const auto& v : row.values) m = std::max(m, std::abs(v));
  return m;
}

void NliTensor::prune(double threshold) {
  if (threshold <= 0.0) return;
  const double cut = threshold * peak_abs();
  for (auto it = rows.begin(); it != rows.end();) {
    auto& row = it->second;
    std::size_t lo = 0, hi = row.values.size();
    while (lo < hi && std::abs(row.values[lo]) < cut) ++lo;
    while (hi > lo && std::abs(row.values[hi - 1]) < cut) --hi;
    if (lo == hi) {
      it = rows.erase(it);
      continue;
    }
    // Interior entries below the cut are zeroed but keep their slots so the
    // row stays contiguous.
    for (std::size_t i = lo; i < hi; ++i)
      if (std::abs(row.values[i]) < cut) row.values[i] = {0.0, 0.0};
    row.values.erase(row.values.begin() + hi, row.values.end());
    row.values.erase(row.values.begin(), row.values.begin() + lo);
    row.k_start += static_cast<int>(lo);
    ++it;
  }
}

std::pair<int, int> resolve_k_range(const LinkConfig& link, const WdmPlan& plan,
                                    const QuadratureSettings& quad,
                                    TensorKind kind, int c) {
  if (quad.k_min != 0 || quad.k_max != 0) return {quad.k_min, quad.k_max};
  if (kind == TensorKind::SelfSpm || kind == TensorKind::CrossSpm)
    return {-quad.n_max, quad.n_max};
  const WdmChannel& ch = plan.channel(c);
  const double T = plan.symbol_period;
  // The interaction peaks where k T tracks the negated walk-off delay.
  double e0 = -ch.delay / T;
  double e1 = -(ch.delay - link.beta2() * ch.center_freq * link.length()) / T;
  int lo = static_cast<int>(std::floor(std::min(e0, e1))) - quad.walkoff_pad;
  int hi = static_cast<int>(std::ceil(std::max(e0, e1))) + quad.walkoff_pad;
  return {lo, hi};
}

cplx compute_A(int n, int k, int kprime, double t1, double t2, double t3,
               const LinkConfig& link, const WdmPlan& plan,
               const QuadratureSettings& quad) {
  link.validate();
  plan.validate();
  quad.validate();
  if (link.gamma() == 0.0) return {0.0, 0.0};
  ShiftSpec s;
  s.t1 = t1;
  s.t2_const = t2;
  s.t3_const = t3;
  QuadratureSettings q = quad;
  q.n_max = std::abs(n);
  q.dk_max = std::max(1, std::abs(kprime - k));
  q.k_min = std::min(k, 0);
  q.k_max = std::max(k, 0);
  q.drop_threshold = 0.0;
  BuildGeometry g = make_geometry(link, plan, q, s, q.k_min, q.k_max);
  double est = 0.0;
  int panels = converge_panels(link, plan, s, g, q,
                               auto_panels(link, plan, s, q), &est);
  if (est >= q.z_tol)
    throw Error("compute_A: z quadrature did not converge; estimated relative "
                "error " + std::to_string(est));
  RowsAcc acc = run_nodes(link, plan, s, g,
                          gl_nodes(link.length(), panels, q.gl_points),
                          q.threads);
  return acc.row(n, kprime - k)[k - g.k_min];
}

std::pair<NliTensor, NliTensor> spm_tensors(const LinkConfig& link,
                                            const WdmPlan& plan,
                                            const QuadratureSettings& quad,
                                            double pol_delay) {
  NliTensor s = build_tensor(link, plan, quad, TensorKind::SelfSpm, 0, pol_delay);
  NliTensor st =
      build_tensor(link, plan, quad, TensorKind::CrossSpm, 0, pol_delay);
  return {std::move(s), std::move(st)};
}

std::array<NliTensor, 3> xpm_tensors(const LinkConfig& link,
                                     const WdmPlan& plan,
                                     const QuadratureSettings& quad, int c) {
  if (c == 0) throw Error("xpm_tensors: interferer index must be nonzero");
  NliTensor cc = build_tensor(link, plan, quad, TensorKind::SelfXpm, c, 0.0);
  NliTensor ct = build_tensor(link, plan, quad, TensorKind::CrossXpm, c, 0.0);
  NliTensor d = build_tensor(link, plan, quad, TensorKind::MixedXpm, c, 0.0);
  return {std::move(cc), std::move(ct), std::move(d)};
}

std::array<std::uint8_t, 32> tensor_provenance_key(
    const LinkConfig& link, const WdmPlan& plan, const QuadratureSettings& quad,
    TensorKind kind, int c) {
  HashInput h;
  h.add_str("nli-tensor-v1");
  h.add_f64(link.alpha_db_per_km);
  h.add_f64(link.beta2_ps2_per_km);
  h.add_f64(link.gamma_per_w_km);
  h.add_f64(link.length_km);
  h.add_f64(link.eta_phonon);
  h.add_f64(link.n_ase_psd);
  h.add_f64(link.wavelength_nm);
  h.add_f64(plan.symbol_period);
  h.add_f64(plan.channel_bandwidth);
  h.add_i64(plan.subcarriers_per_channel);
  h.add_u64(plan.channels.size());
  for (const auto& ch : plan.channels) {
    h.add_i64(ch.index);
    h.add_f64(ch.center_freq);
    h.add_f64(ch.delay);
    h.add_f64(ch.delay_bar);
  }
  h.add_i64(quad.n_max);
  h.add_i64(quad.k_min);
  h.add_i64(quad.k_max);
  h.add_i64(quad.dk_max);
  h.add_i64(quad.oversampling);
  h.add_i64(quad.margin_symbols);
  h.add_i64(quad.walkoff_pad);
  h.add_i64(quad.gl_points);
  h.add_i64(quad.initial_panels);
  h.add_f64(quad.z_tol);
  h.add_f64(quad.drop_threshold);
  h.add_i64(static_cast<int>(kind));
  h.add_i64(c);
  return h.digest();
}

}  // namespace dpwdm

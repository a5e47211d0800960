#include "dpwdm/rp.hpp"

#include <cmath>
#include <map>

#include "dpwdm/fft.hpp"

namespace dpwdm {

namespace {

std::size_t wrap(long i, std::size_t m) {
  long r = i % static_cast<long>(m);
  if (r < 0) r += static_cast<long>(m);
  return static_cast<std::size_t>(r);
}

/// Lazily built spectra of the pairwise symbol products
/// g_delta[i] = p[i] * conj(q[i + delta]) on the cyclic block.
class PairSpectra {
 public:
  PairSpectra(const std::vector<cplx>& p, const std::vector<cplx>& q)
      : p_(p), q_(q) {}

  const std::vector<cplx>& get(int delta) {
    auto it = cache_.find(delta);
    if (it != cache_.end()) return it->second;
    const std::size_t m = p_.size();
    std::vector<cplx> g(m);
    for (std::size_t i = 0; i < m; ++i)
      g[i] = p_[i] * std::conj(q_[wrap(static_cast<long>(i) + delta, m)]);
    fft(g);
    return cache_.emplace(delta, std::move(g)).first->second;
  }

 private:
  const std::vector<cplx>& p_;
  const std::vector<cplx>& q_;
  std::map<int, std::vector<cplx>> cache_;
};

}  // namespace

RpEngine::Prepared RpEngine::prepare(const NliTensor& t) const {
  Prepared p;
  std::map<int, std::vector<RowSpec>> grouped;
  for (const auto& [key, row] : t.rows) {
    if (row.values.empty()) continue;
    if (row.values.size() > m_)
      throw Error("RpEngine: tensor row spans " +
                  std::to_string(row.values.size()) +
                  " symbols, longer than the block length " +
                  std::to_string(m_));
    // The correlation sum_k row[k] g[m + k] needs the reversed-phase spectrum
    // sum_k row[k] e^{+2 pi j k f / M}; conjugating around the FFT flips the
    // twiddle sign without conjugating the row values.
    std::vector<cplx> r(m_, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < row.values.size(); ++i)
      r[wrap(row.k_start + static_cast<long>(i), m_)] += std::conj(row.values[i]);
    fft(r);
    for (auto& x : r) x = std::conj(x);
    grouped[key.second].push_back(RowSpec{key.first, std::move(r)});
  }
  for (auto& [delta, rows] : grouped) {
    p.deltas.push_back(delta);
    p.rows.push_back(std::move(rows));
  }
  return p;
}

RpEngine::RpEngine(const RpTensors& tensors, std::size_t block_len)
    : m_(block_len) {
  if (m_ < 2) throw Error("RpEngine: block length must be at least 2");
  auto note_range = [this](const NliTensor& t) {
    for (const auto& [key, row] : t.rows) {
      n_min_ = std::min(n_min_, key.first);
      n_max_ = std::max(n_max_, key.first);
    }
  };
  note_range(tensors.spm);
  note_range(tensors.spm_cross);
  for (const auto& intf : tensors.interferers) {
    note_range(intf.c);
    note_range(intf.c_tilde);
    note_range(intf.d);
  }
  spm_ = prepare(tensors.spm);
  spm_cross_ = prepare(tensors.spm_cross);
  for (const auto& intf : tensors.interferers)
    interferers_.push_back(PreparedInterferer{
        prepare(intf.c), prepare(intf.c_tilde), prepare(intf.d)});
}

NliDecomposition RpEngine::decompose(
    const SymbolBlock& coi, const std::vector<SymbolBlock>& interferers,
    RpMode mode) const {
  coi.validate();
  if (coi.size() != m_)
    throw Error("RpEngine: symbol block length does not match the engine");
  if (interferers.size() != interferers_.size())
    throw Error("RpEngine: expected " + std::to_string(interferers_.size()) +
                " interferer blocks, got " + std::to_string(interferers.size()));
  for (const auto& blk : interferers) {
    blk.validate();
    if (blk.size() != m_)
      throw Error("RpEngine: interferer block length does not match the engine");
  }

  const int nn = n_max_ - n_min_ + 1;
  // Spectrum accumulators per decomposition index n. fwd feeds theta and v,
  // bar feeds theta_bar and v_bar, mix/mix_bar are the cross-polarization
  // terms feeding psi, v and v_bar.
  std::vector<std::vector<cplx>> fwd(nn), bar(nn), mix(nn), mix_bar(nn);

  auto accumulate = [&](const Prepared& t, PairSpectra& g,
                        std::vector<std::vector<cplx>>& acc) {
    for (std::size_t di = 0; di < t.deltas.size(); ++di) {
      const std::vector<cplx>& ghat = g.get(t.deltas[di]);
      for (const RowSpec& row : t.rows[di]) {
        auto& dst = acc[static_cast<std::size_t>(row.n - n_min_)];
        if (dst.empty()) dst.assign(m_, cplx{0.0, 0.0});
        for (std::size_t f = 0; f < m_; ++f)
          dst[f] += ghat[f] * row.conj_spec[f];
      }
    }
  };

  for (std::size_t i = 0; i < interferers_.size(); ++i) {
    const auto& prep = interferers_[i];
    const auto& b = interferers[i].pol1;
    const auto& bb = interferers[i].pol2;
    PairSpectra g11(b, b), g22(bb, bb), g12(b, bb), g21(bb, b);
    accumulate(prep.c, g11, fwd);
    accumulate(prep.c, g22, bar);
    accumulate(prep.c_tilde, g22, fwd);
    accumulate(prep.c_tilde, g11, bar);
    accumulate(prep.d, g12, mix);
    accumulate(prep.d, g21, mix_bar);
  }
  if (mode == RpMode::DispComp) {
    PairSpectra gxx(coi.pol1, coi.pol1), gyy(coi.pol2, coi.pol2);
    accumulate(spm_, gxx, fwd);
    accumulate(spm_, gyy, bar);
    accumulate(spm_cross_, gyy, fwd);
    accumulate(spm_cross_, gxx, bar);
  }

  for (auto* family : {&fwd, &bar, &mix, &mix_bar})
    for (auto& acc : *family)
      if (!acc.empty()) ifft(acc);

  NliDecomposition out;
  out.theta.assign(m_, 0.0);
  out.theta_bar.assign(m_, 0.0);
  out.psi.assign(m_, cplx{0.0, 0.0});
  out.v.assign(m_, cplx{0.0, 0.0});
  out.v_bar.assign(m_, cplx{0.0, 0.0});

  auto slot = [&](std::vector<std::vector<cplx>>& family,
                  int n) -> const std::vector<cplx>* {
    if (n < n_min_ || n > n_max_) return nullptr;
    const auto& v = family[static_cast<std::size_t>(n - n_min_)];
    return v.empty() ? nullptr : &v;
  };

  if (const auto* f = slot(fwd, 0))
    for (std::size_t m = 0; m < m_; ++m) out.theta[m] = (*f)[m].real();
  if (const auto* f = slot(bar, 0))
    for (std::size_t m = 0; m < m_; ++m) out.theta_bar[m] = (*f)[m].real();
  if (const auto* f = slot(mix, 0))
    for (std::size_t m = 0; m < m_; ++m) out.psi[m] = (*f)[m];

  const cplx jj{0.0, 1.0};
  for (int n = n_min_; n <= n_max_; ++n) {
    if (n == 0) continue;
    const auto* f_fwd = slot(fwd, n);
    const auto* f_bar = slot(bar, n);
    const auto* f_mix = slot(mix, n);
    const auto* f_mix_bar = slot(mix_bar, n);
    if (!f_fwd && !f_bar && !f_mix && !f_mix_bar) continue;
    for (std::size_t m = 0; m < m_; ++m) {
      std::size_t mn = wrap(static_cast<long>(m) + n, m_);
      if (f_fwd) out.v[m] += jj * (*f_fwd)[m] * coi.pol1[mn];
      if (f_mix) out.v[m] += jj * (*f_mix)[m] * coi.pol2[mn];
      if (f_bar) out.v_bar[m] += jj * (*f_bar)[m] * coi.pol2[mn];
      if (f_mix_bar) out.v_bar[m] += jj * (*f_mix_bar)[m] * coi.pol1[mn];
    }
  }
  return out;
}

std::pair<cplx, cplx> rotate_symbol(double theta, double theta_bar, cplx psi,
                                    cplx x1, cplx x2) {
  // exp(j H) for Hermitian H = [[theta, psi], [psi*, theta_bar]]:
  // e^{j tr/2} (cos(d) I + j sin(d)/d (H - (tr/2) I)) with d the half-spread
  // of the eigenvalues.
  const double half_tr = 0.5 * (theta + theta_bar);
  const double a = 0.5 * (theta - theta_bar);
  const double d = std::sqrt(a * a + std::norm(psi));
  const double c = std::cos(d);
  const double s = d > 1e-30 ? std::sin(d) / d : 1.0;
  const cplx phase = std::polar(1.0, half_tr);
  const cplx jj{0.0, 1.0};
  cplx y1 = phase * (c * x1 + jj * s * (a * x1 + psi * x2));
  cplx y2 = phase * (c * x2 + jj * s * (std::conj(psi) * x1 - a * x2));
  return {y1, y2};
}

SymbolBlock RpEngine::channel(const SymbolBlock& coi,
                              const std::vector<SymbolBlock>& interferers,
                              const LinkConfig& link, RpMode mode,
                              Rng& rng) const {
  NliDecomposition d = decompose(coi, interferers, mode);
  const double n_ase = link.ase_psd();
  SymbolBlock out = coi;
  for (std::size_t m = 0; m < m_; ++m) {
    auto [y1, y2] = rotate_symbol(d.theta[m], d.theta_bar[m], d.psi[m],
                                  coi.pol1[m], coi.pol2[m]);
    out.pol1[m] = y1 + d.v[m] + (n_ase > 0.0 ? rng.cscg(n_ase) : cplx{0.0, 0.0});
    out.pol2[m] =
        y2 + d.v_bar[m] + (n_ase > 0.0 ? rng.cscg(n_ase) : cplx{0.0, 0.0});
  }
  return out;
}

NliDecomposition rp_decompose(const SymbolBlock& coi,
                              const std::vector<SymbolBlock>& interferers,
                              const RpTensors& tensors, RpMode mode) {
  return RpEngine(tensors, coi.size()).decompose(coi, interferers, mode);
}

SymbolBlock rp_channel(const SymbolBlock& coi,
                       const std::vector<SymbolBlock>& interferers,
                       const RpTensors& tensors, const LinkConfig& link,
                       RpMode mode, Rng& rng) {
  return RpEngine(tensors, coi.size())
      .channel(coi, interferers, link, mode, rng);
}

SymbolBlock remove_mean_phase(const SymbolBlock& block, double theta_mean,
                              double theta_bar_mean) {
  SymbolBlock out = block;
  const cplx r1 = std::polar(1.0, -theta_mean);
  const cplx r2 = std::polar(1.0, -theta_bar_mean);
  for (auto& x : out.pol1) x *= r1;
  for (auto& x : out.pol2) x *= r2;
  return out;
}

SymbolBlock gaussian_symbols(std::size_t len, double energy, double energy_bar,
                             Rng& rng) {
  SymbolBlock blk;
  blk.pol1.resize(len);
  blk.pol2.resize(len);
  for (auto& x : blk.pol1) x = rng.cscg(energy);
  for (auto& x : blk.pol2) x = rng.cscg(energy_bar);
  blk.energy_per_symbol = energy;
  return blk;
}

}  // namespace dpwdm

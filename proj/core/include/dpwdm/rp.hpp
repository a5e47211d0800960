// Discrete-time regular-perturbation channel surrogate.
//
// Maps transmitted symbol blocks plus interferer blocks to received blocks
// through the NLI tensors. The nonlinear interference on each symbol is split
// into a 2x2 rotation part (theta, theta_bar, psi: terms that multiply the
// current two-polarization symbol) and a residual additive part (v, v_bar).
// Block edges use cyclic extension, so every symbol sees the full NLI memory
// and all per-row sums become cyclic correlations evaluated with FFTs.
#pragma once

#include <vector>

#include "dpwdm/nli.hpp"
#include "dpwdm/rng.hpp"
#include "dpwdm/signal.hpp"

namespace dpwdm {

/// Receiver-side linear processing the surrogate assumes.
/// DispComp: dispersion compensation only; intra-channel tensors contribute.
/// Dbp: single-channel digital backpropagation; intra-channel terms cancel.
enum class RpMode { DispComp, Dbp };

/// Per-symbol rotation and residual-noise components of the NLI.
struct NliDecomposition {
  std::vector<double> theta, theta_bar;  // rad
  std::vector<cplx> psi;                 // rad
  std::vector<cplx> v, v_bar;            // sqrt(J)

  std::size_t size() const { return theta.size(); }
};

/// Tensor bundle for one link/plan configuration. The intra-channel pair may
/// be left empty when only Dbp mode is used.
struct RpTensors {
  NliTensor spm;        // S
  NliTensor spm_cross;  // S~
  struct Interferer {
    int channel = 0;
    NliTensor c, c_tilde, d;
  };
  std::vector<Interferer> interferers;
};

/// Precomputes the per-row spectra of all tensors for a fixed block length,
/// so repeated Monte-Carlo blocks cost a handful of FFTs each.
class RpEngine {
 public:
  RpEngine(const RpTensors& tensors, std::size_t block_len);

  std::size_t block_len() const { return m_; }

  /// theta/psi/v decomposition of the NLI for one block. `interferers` must
  /// be aligned with the tensor bundle's interferer list.
  NliDecomposition decompose(const SymbolBlock& coi,
                             const std::vector<SymbolBlock>& interferers,
                             RpMode mode) const;

  /// Full surrogate channel: y = M x + w + v with M = exp(j [[theta, psi],
  /// [psi*, theta_bar]]) and w i.i.d. circular Gaussian of variance
  /// link.ase_psd() per polarization.
  SymbolBlock channel(const SymbolBlock& coi,
                      const std::vector<SymbolBlock>& interferers,
                      const LinkConfig& link, RpMode mode, Rng& rng) const;

 private:
  struct RowSpec {
    int n = 0;
    std::vector<cplx> conj_spec;  // conj(FFT(conj(cyclic row))), length m_
  };
  // rows of one tensor grouped by delta = k' - k
  struct Prepared {
    std::vector<int> deltas;
    std::vector<std::vector<RowSpec>> rows;  // rows[i] belongs to deltas[i]
    bool empty() const { return deltas.empty(); }
  };

  Prepared prepare(const NliTensor& t) const;

  std::size_t m_;
  Prepared spm_, spm_cross_;
  struct PreparedInterferer {
    Prepared c, c_tilde, d;
  };
  std::vector<PreparedInterferer> interferers_;
  int n_min_ = 0, n_max_ = 0;
};

/// One-shot convenience wrappers; build an RpEngine directly for loops.
NliDecomposition rp_decompose(const SymbolBlock& coi,
                              const std::vector<SymbolBlock>& interferers,
                              const RpTensors& tensors, RpMode mode);
SymbolBlock rp_channel(const SymbolBlock& coi,
                       const std::vector<SymbolBlock>& interferers,
                       const RpTensors& tensors, const LinkConfig& link,
                       RpMode mode, Rng& rng);

/// Unitary rotation exp(j [[theta, psi], [conj(psi), theta_bar]]) applied to
/// the two-polarization symbol (x1, x2), in closed form.
std::pair<cplx, cplx> rotate_symbol(double theta, double theta_bar, cplx psi,
                                    cplx x1, cplx x2);

/// Removes the mean phase rotation per polarization (receiver-side).
SymbolBlock remove_mean_phase(const SymbolBlock& block, double theta_mean,
                              double theta_bar_mean);

/// I.i.d. circular Gaussian symbols with per-polarization energies.
SymbolBlock gaussian_symbols(std::size_t len, double energy, double energy_bar,
                             Rng& rng);

}  // namespace dpwdm

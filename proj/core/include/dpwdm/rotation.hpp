// Hidden-process rotation models for the mismatched receiver.
//
// Two families: a polarization-drift model (common Wiener phase plus a random
// walk of isotropic rotations on the Poincare sphere) and a Markov-rotation
// model (low-memory Gaussian AR processes phi, phi_bar, psi combined into a
// unitary 2x2 rotation per symbol). Also the per-polarization real whitening
// filter applied before rate estimation.
#pragma once

#include <utility>
#include <vector>

#include "dpwdm/rng.hpp"
#include "dpwdm/signal.hpp"
#include "dpwdm/stats.hpp"

namespace dpwdm {

/// Dense 2x2 complex matrix, the only shape these models need.
struct Mat2 {
  cplx m00{1.0, 0.0}, m01{0.0, 0.0}, m10{0.0, 0.0}, m11{1.0, 0.0};

  static Mat2 identity() { return {}; }
  Mat2 operator*(const Mat2& o) const {
    return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
            m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
  }
  std::pair<cplx, cplx> apply(cplx x1, cplx x2) const {
    return {m00 * x1 + m01 * x2, m10 * x1 + m11 * x2};
  }
};

/// Deviation from unitarity, max-abs of U^H U - I.
double unitarity_error(const Mat2& u);
/// Projects a near-unitary matrix back onto the unitary group.
Mat2 unitarize(const Mat2& u);

/// exp(j [[theta, psi], [conj(psi), theta_bar]]) in closed form; always
/// unitary.
Mat2 rotation_matrix(double theta, double theta_bar, cplx psi);

/// Isotropic random rotation on the Poincare sphere: exp(j sum_i a_i sigma_i)
/// with the a_i i.i.d. N(0, sigma_a^2) over the three Pauli matrices.
Mat2 irrps_sample(double sigma_a, Rng& rng);

/// Polarization-drift model parameters: Wiener phase increment and rotation
/// increment standard deviations.
struct PdParams {
  double sigma_delta = 0.0;  // rad
  double sigma_a = 0.0;      // rad
};

struct PdState {
  double theta = 0.0;
  Mat2 j = Mat2::identity();
  std::size_t steps = 0;
};

/// Advances one symbol: theta random walk, J pre-multiplied by a fresh
/// isotropic rotation. J is re-unitarized every 10^4 steps to bound drift.
/// The applied channel matrix is e^{j theta} J.
void pd_step(PdState& state, const PdParams& p, Rng& rng);
Mat2 pd_matrix(const PdState& state);

/// AR coefficients g and innovation standard deviation fitted so the
/// stationary process matches the covariance sequence r[0..mu]:
/// g = c12^T C22^{-1}, sigma^2 = c11 - g^T c21 for the symmetric Toeplitz
/// matrix built from r. Throws naming the offending pivot when the matrix is
/// not positive definite.
struct ArFit {
  std::vector<double> coeffs;  // g[1..mu]
  double innovation_sd = 0.0;
};
ArFit ar_fit(const std::vector<double>& cov_first_column);

/// Markov-rotation model: theta = s_phi (2 phi + phi_bar),
/// theta_bar = s_phi (phi + 2 phi_bar), both phi processes AR(mu) with the
/// same fit; psi an independent proper complex AR(mu) scaled by s_psi.
struct MrParams {
  std::size_t memory = 4;  // mu
  std::vector<double> ar_coeffs;
  double innovation_sd = 0.0;
  std::vector<double> psi_ar_coeffs;
  double psi_innovation_sd = 0.0;
  double s_phi = 1.0;
  double s_psi = 1.0;
  std::vector<double> cov_phi;  // fit targets, kept for stationary starts
  std::vector<double> cov_psi;

  void validate() const;
};

/// Builds MrParams from analytic moments: phi fitted to r_theta/5, psi to
/// Re(r_psi), both over lags 0..mu.
MrParams mr_from_moments(const MomentSet& m, std::size_t mu);

/// mu-step histories, most recent last.
struct MrState {
  std::vector<double> phi, phi_bar;
  std::vector<cplx> psi;
};

/// Draws the initial histories from the stationary joint Gaussian given by
/// the fit targets.
MrState mr_init_stationary(const MrParams& p, Rng& rng);
MrState mr_init_zero(const MrParams& p);

/// Advances the three AR processes one symbol and returns the resulting
/// unitary rotation.
Mat2 mr_step(MrState& state, const MrParams& p, Rng& rng);

/// Per-polarization real FIR whitening filter, unit norm per polarization.
struct WhitenFilter {
  std::vector<double> taps;      // h
  std::vector<double> taps_bar;  // h_bar

  void validate() const;
};

/// Symmetric 3-tap filter [h2, 1, h2], normalized to unit norm, same for both
/// polarizations.
WhitenFilter symmetric3_whitener(double h2);

/// Valid (non-cyclic) filtering a_m = sum_l diag(h_l, hbar_l) y_{m-l};
/// the output is shorter by taps-1 symbols.
SymbolBlock whiten(const SymbolBlock& block, const WhitenFilter& f);

}  // namespace dpwdm

// First- and second-order statistics of the per-symbol NLI decomposition.
//
// analytic_moments evaluates the closed-form finite sums over the tensors;
// the heavy double sums over (k, k') are precomputed once per tensor bundle
// into LagContractions, so power sweeps that only change channel energies
// reuse them. empirical_moments estimates the same quantities from
// Monte-Carlo decompositions with jackknife standard errors.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpwdm/rp.hpp"

namespace dpwdm {

/// Mean and lag-indexed second-order statistics of theta, theta_bar, psi and
/// v. All lag vectors run over lags 0..l_max; negative lags follow from
/// r[-l] = r[l] for the real sequences and r[-l] = conj(r[l]) for the complex
/// ones.
struct MomentSet {
  double theta_mean = 0.0;
  double theta_bar_mean = 0.0;
  std::vector<double> r_theta;        // rad^2, autocovariance of theta
  std::vector<double> r_theta_bar;    // rad^2
  std::vector<double> r_theta_cross;  // rad^2, cov(theta_m, theta_bar_{m+l})
  std::vector<cplx> r_psi;            // rad^2, <psi_m psi*_{m+l}>
  std::vector<cplx> r_v;              // J, <v_m v*_{m+l}>
  std::vector<cplx> r_v_bar;          // J
  std::vector<cplx> isi_cross;        // <v_m x*_{m+l}>, entry 0 is zero
  double n_ase = 0.0;                 // W/Hz, for the combined additive noise

  std::size_t lag_count() const { return r_theta.size(); }
  /// Additive-noise autocorrelation: ASE plus residual NLI.
  cplx r_z(std::size_t lag) const;
  cplx r_z_bar(std::size_t lag) const;
};

/// Energy-independent tensor contractions behind the moment formulas,
/// reusable across channel-power sweeps.
struct LagContractions {
  struct PerChannel {
    int channel = 0;
    // n = 0 pair sums, lag-indexed: diag restricts to k = k', full sums all
    // (k, k'). Suffixes name the tensor pair: c = same-pol coupling, t = its
    // cross-pol counterpart, d = polarization-mixing.
    std::vector<cplx> th_cc_diag, th_cc_full;
    std::vector<cplx> th_tt_diag, th_tt_full;
    std::vector<cplx> th_ct_diag, th_ct_full;
    std::vector<cplx> th_tc_diag, th_tc_full;
    std::vector<cplx> psi_dd_full;
    // n != 0, n != lag pair sums for the residual additive noise
    std::vector<cplx> v_cc_diag, v_cc_full;
    std::vector<cplx> v_tt_diag, v_tt_full;
    std::vector<cplx> v_dd_full;
    // diagonal traces sum_k T_{n,k,k} per n, for the cross-channel terms and
    // the input-symbol correlation
    std::map<int, cplx> trace_c, trace_t;
  };
  std::vector<PerChannel> channels;
  std::size_t lag_max = 0;
};

/// Precomputes all lag contractions up to lag_max.
/// Throws when the tensors' decomposition-index span cannot support lag_max.
LagContractions precompute_moment_contractions(const RpTensors& tensors,
                                               std::size_t lag_max);

/// Closed-form moments for the given channel energies. The plan's channel 0
/// is the channel of interest; every tensor-bundle interferer must appear in
/// the plan.
MomentSet analytic_moments(const LagContractions& contractions,
                           const WdmPlan& plan, const LinkConfig& link);
MomentSet analytic_moments(const RpTensors& tensors, const WdmPlan& plan,
                           const LinkConfig& link, std::size_t lag_max);

/// Wide-memory approximation of the phase-noise statistics, valid when the
/// per-channel walk-off spans many symbols.
struct LargeDispersionMoments {
  double theta_mean = 0.0;
  std::vector<double> r_theta;  // lags 0..lag_max
  bool approximation_valid = true;  // false when some walk-off span is small
};
LargeDispersionMoments large_dispersion_moments(const WdmPlan& plan,
                                                const LinkConfig& link,
                                                std::size_t lag_max = 0);

/// Monte-Carlo estimate with component-wise jackknife standard errors over
/// blocks. The blocks are treated as cyclic, matching how they are produced.
/// isi_cross is not estimable from decompositions alone and stays zero.
struct MomentEstimate {
  MomentSet value;
  MomentSet stderr_;  // complex entries hold (se of real, se of imag)
  bool degenerate = false;  // all blocks identical; standard errors are zero
};
MomentEstimate empirical_moments(
    const std::vector<NliDecomposition>& decompositions, std::size_t lag_max);

/// CSV export, one row per lag.
std::string moments_to_csv(const MomentSet& m);

}  // namespace dpwdm

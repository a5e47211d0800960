// Achievable-rate estimation for the mismatched rotation-model receiver.
//
// The rate lower bound is I = h(A) - h(A|X), both entropies taken under the
// mismatched model a_m = sum_l diag(h_l, hbar_l) M_{m-l} x_{m-l} + Xi_m with
// i.i.d. circular Gaussian Xi. h(A) has a closed Gaussian-Toeplitz form
// because the rotated symbols stay i.i.d. Gaussian; h(A|X) is estimated with
// a particle filter over the hidden rotation process. Parameter fitting
// (sigma_Xi, mean phase, process scalings, whitening tap) lives here too.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpwdm/rotation.hpp"
#include "dpwdm/rp.hpp"

namespace dpwdm {

/// Additive-noise variance fitted by maximum likelihood to the per-symbol
/// norm pairs (||y||, ||x||), modeling ||y||^2 given ||x||^2 as noncentral
/// chi-squared with four degrees of freedom. `at_boundary` flags a maximizer
/// stuck at the search bound even after expansion (or an exact y == x fit).
struct SigmaXiEstimate {
  double variance = 0.0;  // J, per polarization component
  bool at_boundary = false;
};
SigmaXiEstimate estimate_sigma_xi(const std::vector<SymbolBlock>& x,
                                  const std::vector<SymbolBlock>& y);

/// Mean phase per polarization, angle of sum_m y_m x_m*. `degenerate` flags
/// vanishing correlation (angle meaningless).
struct MeanPhaseEstimate {
  double theta = 0.0;      // rad
  double theta_bar = 0.0;  // rad
  bool degenerate = false;
};
MeanPhaseEstimate estimate_mean_phase(const std::vector<SymbolBlock>& x,
                                      const std::vector<SymbolBlock>& y);

/// Autocovariance first column of the whitened output sequence,
/// r[l] = energy * sum_k h_k h_{k+l} + sigma_xi2 delta[l], lags 0..taps-1.
std::vector<double> whitened_output_cov(double energy,
                                        const std::vector<double>& taps,
                                        double sigma_xi2);

/// Zero-mean circular Gaussian block density with banded Toeplitz covariance.
/// The first covariance column is real with cov_first_col.size()-1 nonzero
/// lags; the banded Cholesky factor is computed once and reused per block.
class GaussianBlockDensity {
 public:
  GaussianBlockDensity(const std::vector<double>& cov_first_col,
                       std::size_t block_len);

  std::size_t block_len() const { return m_; }
  /// -log2 q(a) for one block of length block_len.
  double neg_log2_density(const std::vector<cplx>& a) const;
  /// Exact mean of neg_log2_density under the matched model,
  /// block_len * log2(pi e) + log2 det R. This is the block entropy in bits.
  double expected_neg_log2_density() const;

 private:
  std::size_t m_ = 0, band_ = 0;
  std::vector<double> chol_;  // lower factor, rows of band_+1 entries
  double log2_det_ = 0.0;
};

/// -log2 of the two-polarization Gaussian-Toeplitz density of each whitened
/// output block, one value per block (bits per 2-pol block).
std::vector<double> output_entropy_runs(const std::vector<SymbolBlock>& outputs,
                                        double energy, const WhitenFilter& f,
                                        double sigma_xi2);
double output_entropy(const std::vector<SymbolBlock>& outputs, double energy,
                      const WhitenFilter& f, double sigma_xi2);

/// Particle-filter configuration. Monte-Carlo run r draws its generator from
/// (seed, r), so results are reproducible and independent of scheduling.
struct PfConfig {
  std::size_t particles = 256;     // K
  double resample_threshold = 0.5; // resample when ESS < threshold * K
  std::uint64_t seed = 1;
};

/// Snapshot of the rotation-process particle cloud: normalized weights plus
/// the per-particle phi/phi_bar/psi histories.
struct ParticleEnsemble {
  struct Particle {
    double weight = 0.0;
    MrState state;
  };
  std::vector<Particle> particles;
  double resample_threshold = 0.5;

  double effective_sample_size() const;
  /// Checks that the weights form a probability vector (sum 1 within 1e-12)
  /// and that all histories share one length.
  void validate() const;
};

/// Per-run -sum_m log2 D_m values. Runs whose predictive density underflows
/// to zero are excluded: their entry is NaN, `excluded` counts them and
/// `diagnostic` describes the first failure.
struct PfResult {
  std::vector<double> bits;  // per run, bits per 2-pol block; NaN if excluded
  std::size_t excluded = 0;
  std::string diagnostic;

  double mean() const;  // over the non-excluded runs
};

/// Conditional block entropy -sum_m log2 D_m by particle filtering, one run
/// per (output, input) block pair. `outputs` are the whitened received
/// blocks; `inputs` the matching transmitted blocks, longer by taps-1
/// symbols. Systematic resampling below the ESS threshold. The Markov
/// rotation overload can export the final ensemble of the last run.
PfResult pf_conditional_entropy_runs(const std::vector<SymbolBlock>& outputs,
                                     const std::vector<SymbolBlock>& inputs,
                                     const MrParams& params,
                                     const WhitenFilter& filter,
                                     double sigma_xi2, const PfConfig& cfg,
                                     ParticleEnsemble* final_ensemble = nullptr);
PfResult pf_conditional_entropy_runs(const std::vector<SymbolBlock>& outputs,
                                     const std::vector<SymbolBlock>& inputs,
                                     const PdParams& params,
                                     const WhitenFilter& filter,
                                     double sigma_xi2, const PfConfig& cfg);

/// Rate lower bound assembled from per-run entropies (same runs for both, a
/// variance-reduction choice). rate = (h_out - h_cond) / (2 block_len) in
/// bits per symbol per polarization; std_error is the jackknife standard
/// error of the per-run rates. Runs with a NaN entry on either side are
/// skipped.
struct RateEstimate {
  double h_out = 0.0;     // bits per 2-pol block
  double h_cond = 0.0;    // bits per 2-pol block
  double rate = 0.0;      // bits per symbol per polarization
  double std_error = 0.0; // bits, on `rate`
  std::size_t runs = 0;
};
RateEstimate achievable_rate(const std::vector<double>& h_out_runs,
                             const std::vector<double>& h_cond_runs,
                             std::size_t block_len);

/// Fitted multiplicative scalings and whitening tap. The scalings multiply
/// (s_phi, s_psi) for the Markov-rotation model or (sigma_delta, sigma_a)
/// for the polarization-drift model. Fitting is a 13x13 multiplicative grid
/// over [1/8, 8] minimizing the particle-filter conditional entropy with an
/// identity filter, then a golden-section search for the symmetric 3-tap
/// whitener coefficient h2 in [-0.5, 0.5] minimizing h(A|X) - h(A) on the
/// training blocks (the negated rate bound). A flat grid objective (spread
/// below its standard error) returns the unscaled center with a flag.
struct ScalingFit {
  double scale_phi = 1.0;  // multiplier on s_phi resp. sigma_delta
  double scale_psi = 1.0;  // multiplier on s_psi resp. sigma_a
  double h2 = 0.0;
  double objective_bits = 0.0;  // mean h(A|X) - h(A) per run at the fit
  bool flat_objective = false;
};
ScalingFit fit_mr_scalings(const std::vector<SymbolBlock>& y,
                           const std::vector<SymbolBlock>& x,
                           const MrParams& base, double sigma_xi2,
                           const PfConfig& cfg);
ScalingFit fit_pd_scalings(const std::vector<SymbolBlock>& y,
                           const std::vector<SymbolBlock>& x,
                           const PdParams& base, double sigma_xi2,
                           const PfConfig& cfg);
MrParams apply_scalings(const MrParams& base, const ScalingFit& fit);
PdParams apply_scalings(const PdParams& base, const ScalingFit& fit);

/// CSV interface for rate results.
std::string rate_csv_header();
void append_rate_csv(std::ostream& os, double power_dbm, int subcarrier,
                     const std::string& model, const RateEstimate& r,
                     std::size_t particles, std::size_t block_len,
                     std::uint64_t seed);

}  // namespace dpwdm

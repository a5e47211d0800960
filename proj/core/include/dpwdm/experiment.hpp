// Experiment orchestration: configuration, seed management, and the wiring
// from channel simulation (surrogate or split-step) through estimation to
// achievable rates, power allocation, and CSV emission.
//
// A configuration is flat key = value text with [section] headers; its
// canonical serialization is hashed and the hash stamped on every output row
// so results are traceable to the exact configuration that produced them.
// Data blocks draw their randomness from (seed, stream) with training
// streams [0, train_runs) and testing streams [train_runs, train_runs +
// test_runs), so the estimation stage never sees a testing block.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dpwdm/fdpa.hpp"
#include "dpwdm/inference.hpp"
#include "dpwdm/nli.hpp"
#include "dpwdm/rp.hpp"
#include "dpwdm/types.hpp"

namespace dpwdm {

struct ExperimentConfig {
  // [link]
  LinkConfig link;

  // [plan]
  int channels = 5;              // WDM wavelengths, odd, centered on the COI
  double spacing_ghz = 50.0;     // wavelength spacing
  double bandwidth_ghz = 50.0;   // per-wavelength bandwidth B
  double symbol_period_ps = 20.0;  // single-carrier symbol period T = 1/B
  int subcarriers = 1;           // S subcarriers per wavelength
  std::string delay_preset = "none";  // none | single-carrier | 4sc | 6sc

  // [pipeline]
  std::string backend = "rp";    // rp | ssfm
  std::string model = "mr";      // mr | pd | memoryless
  bool whitening = true;         // fit and apply the 3-tap whitener (mr only)
  bool single_pol = false;       // second polarization carries no signal
  std::vector<double> powers_dbm = {-6.0};  // launch power per wavelength
  std::size_t block_len = 1024;  // M, symbols per sequence per subcarrier
  std::size_t train_runs = 8;
  std::size_t test_runs = 20;    // N
  std::size_t particles = 256;   // K for rate estimation
  std::size_t fit_particles = 64;  // K during the scaling-grid fit
  std::size_t memory = 4;        // AR model memory mu
  std::uint64_t seed = 1;
  double ssfm_step_km = 0.2;

  // [quadrature]
  int quad_n_max = 8;
  double quad_drop_threshold = 1e-4;

  // [io]
  std::string cache_dir = "cache";
  std::string output_dir = "out";

  void validate() const;
};

/// Parses the key = value configuration text. Unknown sections or keys and
/// malformed values throw.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical serialization; parse(write(c)) == c and the hash is computed
/// over exactly these bytes.
void write_config(std::ostream& os, const ExperimentConfig& cfg);

/// First 12 hex digits of the SHA-256 of the canonical serialization.
std::string config_hash(const ExperimentConfig& cfg);

/// Frequency-dependent delay presets, one delay per carrier in wavelength-
/// major, subcarrier-minor order (both polarizations share the delay).
/// Values are in seconds for per-wavelength symbol period T = symbol_period.
/// Presets are defined for 5 wavelengths; smaller odd counts take the
/// central slice.
std::vector<double> preset_delays(const std::string& name, int channels,
                                  int subcarriers, double symbol_period);

/// WDM plan for one operating point: every (wavelength, subcarrier) carrier
/// with per-subcarrier powers (mW per polarization, identical across
/// wavelengths) and carrier 0 at the COI subcarrier of the central
/// wavelength. Frequencies and delays are re-referenced to carrier 0.
WdmPlan experiment_plan(const ExperimentConfig& cfg,
                        const std::vector<double>& powers_mw,
                        int coi_subcarrier);

/// Subcarriers of the COI wavelength are compensated by the joint
/// back-propagation at the receiver and are not surrogate interferers.
bool is_coi_wavelength(const ExperimentConfig& cfg, const WdmPlan& plan,
                       int channel_index, int coi_subcarrier);

/// Loads the interferer tensor bundle for the plan from the cache directory,
/// building and storing any missing tensor. Tensor values are independent of
/// the carrier powers, so one bundle serves a whole power sweep. gamma == 0
/// returns an empty bundle (pure AWGN).
RpTensors load_or_build_tensors(const ExperimentConfig& cfg,
                                const WdmPlan& plan, int coi_subcarrier);

/// Fitted receiver parameters for one operating point.
struct FittedReceiver {
  double sigma_xi2 = 0.0;       // J per polarization component
  MeanPhaseEstimate phase;
  ScalingFit fit;               // identity for the memoryless model
};

struct PowerPointResult {
  double power_dbm = 0.0;       // per wavelength
  int subcarrier = 0;           // 0-based COI subcarrier
  RateEstimate rate;            // bits/symbol/pol == bits/s/Hz/pol
  FittedReceiver receiver;
};

/// Full train-fit-test pipeline for one COI subcarrier at one operating
/// point. `powers_mw` has one per-subcarrier power as in experiment_plan.
PowerPointResult run_power_point(const ExperimentConfig& cfg,
                                 const std::vector<double>& powers_mw,
                                 double power_dbm, int coi_subcarrier);

/// Sweeps all configured powers and subcarriers; writes
/// rates_<hash>.csv and params_<hash>.csv under output_dir. Deterministic:
/// rerunning a configuration reproduces the files byte for byte.
std::vector<PowerPointResult> run_experiment(const ExperimentConfig& cfg);

/// Rate pipeline as a power-sweep functional for the allocator: maps
/// per-subcarrier powers (mW) to per-subcarrier rates at one shared
/// configuration. Tensor bundles are memoized across calls.
SweepRateFn experiment_rate_fn(const ExperimentConfig& cfg);

/// Emits the data series of one figure ("fig1".."fig5") at the given scale
/// ("desk" or "full") into output_dir; returns the written file names.
/// "full" matches the published operating point and runs for many hours.
std::vector<std::string> reproduce(const std::string& figure,
                                   const std::string& scale,
                                   const std::string& output_dir);

}  // namespace dpwdm

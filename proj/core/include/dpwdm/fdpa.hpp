// Frequency-dependent power allocation across subcarriers.
//
// Each subcarrier's rate-vs-power characteristic is a piecewise-linear
// interpolant (linear in dBm) through simulated operating points. The
// allocator maximizes the summed interpolated rate under a total-power
// constraint by greedy marginal-rate quantum assignment, which solves the
// problem exactly when the curves are concave; Monte-Carlo dips are guarded
// by isotonic smoothing of the marginal rates.
#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "dpwdm/common.hpp"

namespace dpwdm {

/// Rate of one subcarrier as a function of its power. Interpolation is
/// linear in dBm between points; below the grid the curve falls linearly
/// (in mW) to rate 0 at zero power, above the grid it is clamped to the
/// last rate.
struct RateCurve {
  struct Point {
    double power_mw = 0.0;
    double rate = 0.0;  // bits/symbol/pol
  };
  int subcarrier = 0;
  std::vector<Point> points;

  /// Requires >= 2 points with strictly increasing positive powers.
  void validate() const;
  double rate_at(double power_mw) const;
};

/// Rates of all subcarriers for one joint operating point (one power per
/// subcarrier, mW).
using SweepRateFn =
    std::function<std::vector<double>(const std::vector<double>& powers_mw)>;

/// Sweeps the uniform allocations of `grid_mw` (per-subcarrier power) through
/// the pipeline and assembles one curve per subcarrier.
std::vector<RateCurve> build_rate_curves(const SweepRateFn& fn,
                                         std::size_t subcarriers,
                                         const std::vector<double>& grid_mw);

/// Power split maximizing the summed interpolated rate with sum(powers) ==
/// total_mw. `below_grid` warns that the uniform share lies under the first
/// grid point of some curve, where the interpolant is an extrapolation.
struct FdpaAllocation {
  std::vector<double> powers_mw;
  double objective = 0.0;  // summed interpolated rate at the allocation
  bool below_grid = false;
};
FdpaAllocation fdpa_allocate(const std::vector<RateCurve>& curves,
                             double total_mw, std::size_t quanta = 2000);

/// Alternates curve building and allocation. Round k sweeps the grid along
/// the current allocation direction (all subcarriers scaled together), so
/// round 1 from the uniform start reproduces the uniform-allocation sweep.
/// rounds == 0 returns the uniform split.
std::vector<double> iterate_allocation(const SweepRateFn& fn,
                                       std::size_t subcarriers,
                                       const std::vector<double>& grid_mw,
                                       double total_mw, int rounds = 1);

/// CSV round trip: "subcarrier,power_mw,rate_bits" rows; an allocation is
/// reproducible from the curves file alone.
void curves_to_csv(std::ostream& os, const std::vector<RateCurve>& curves);
std::vector<RateCurve> curves_from_csv(std::istream& is);

}  // namespace dpwdm

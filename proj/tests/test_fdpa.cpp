#include "dpwdm/fdpa.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"

using namespace dpwdm;

namespace {

/// Concave reference characteristic: Gaussian-channel rate at the given
/// noise level, sampled on a dBm grid.
RateCurve gaussian_curve(int id, double noise_mw,
                         const std::vector<double>& grid_mw) {
  RateCurve c;
  c.subcarrier = id;
  for (double p : grid_mw) c.points.push_back({p, std::log2(1.0 + p / noise_mw)});
  return c;
}

std::vector<double> dbm_grid(double lo_dbm, double hi_dbm, double step_db) {
  std::vector<double> g;
  for (double d = lo_dbm; d <= hi_dbm + 1e-9; d += step_db)
    g.push_back(1e3 * dbm_to_watt(d));
  return g;
}

/// Exhaustive maximization over quantum compositions, the small-instance
/// oracle for the greedy allocator.
double exhaustive_best(const std::vector<RateCurve>& curves, double total_mw,
                       std::size_t quanta, std::vector<std::size_t>& best) {
  const double q = total_mw / static_cast<double>(quanta);
  double best_obj = -1e300;
  std::vector<std::size_t> counts(curves.size(), 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t s,
                                                          std::size_t left) {
    if (s + 1 == curves.size()) {
      counts[s] = left;
      double obj = 0.0;
      for (std::size_t i = 0; i < curves.size(); ++i)
        obj += curves[i].rate_at(static_cast<double>(counts[i]) * q);
      if (obj > best_obj) {
        best_obj = obj;
        best = counts;
      }
      return;
    }
    for (std::size_t k = 0; k <= left; ++k) {
      counts[s] = k;
      rec(s + 1, left - k);
    }
  };
  rec(0, quanta);
  return best_obj;
}

}  // namespace

TEST_CASE("rate curve validation and interpolation") {
  RateCurve c;
  c.points = {{1.0, 2.0}};
  CHECK_THROWS_AS(c.validate(), Error);
  c.points = {{1.0, 2.0}, {1.0, 2.5}};
  CHECK_THROWS_AS(c.validate(), Error);
  c.points = {{-1.0, 2.0}, {1.0, 2.5}};
  CHECK_THROWS_AS(c.validate(), Error);

  c.points = {{1.0, 2.0}, {10.0, 3.0}};
  c.validate();
  CHECK(c.rate_at(1.0) == doctest::Approx(2.0));
  CHECK(c.rate_at(10.0) == doctest::Approx(3.0));
  // halfway in dBm between 0 and 10 dBm
  CHECK(c.rate_at(1e3 * dbm_to_watt(5.0)) == doctest::Approx(2.5));
  // clamped above, linear to (0, 0) below
  CHECK(c.rate_at(50.0) == doctest::Approx(3.0));
  CHECK(c.rate_at(0.5) == doctest::Approx(1.0));
  CHECK(c.rate_at(0.0) == doctest::Approx(0.0));
}

TEST_CASE("identical concave curves split the power uniformly") {
  const std::vector<double> grid = dbm_grid(-10.0, 5.0, 1.0);
  std::vector<RateCurve> curves;
  for (int s = 1; s <= 4; ++s) curves.push_back(gaussian_curve(s, 0.5, grid));
  const double total = 4.0 * 1e3 * dbm_to_watt(-2.0);
  const FdpaAllocation a = fdpa_allocate(curves, total);
  const double q = total / 2000.0;
  double sum = 0.0;
  for (double p : a.powers_mw) {
    CHECK(std::abs(p - total / 4.0) <= q + 1e-12);
    CHECK(p >= 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(total).epsilon(1e-14));
  CHECK(!a.below_grid);
}

TEST_CASE("a dominant curve takes all the power from flat-zero rivals") {
  const std::vector<double> grid = dbm_grid(-15.0, 5.0, 1.0);
  std::vector<RateCurve> curves;
  curves.push_back(gaussian_curve(1, 0.5, grid));
  for (int s = 2; s <= 3; ++s) {
    RateCurve flat;
    flat.subcarrier = s;
    for (double p : grid) flat.points.push_back({p, 0.0});
    curves.push_back(flat);
  }
  const double total = 2.0;
  const FdpaAllocation a = fdpa_allocate(curves, total);
  CHECK(a.powers_mw[0] == doctest::Approx(total).epsilon(1e-14));
  CHECK(a.powers_mw[1] == 0.0);
  CHECK(a.powers_mw[2] == 0.0);
}

TEST_CASE("allocation never loses to the uniform split") {
  const std::vector<double> grid = dbm_grid(-12.0, 4.0, 1.0);
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> noise(-0.03, 0.03);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RateCurve> curves;
    for (int s = 1; s <= 4; ++s) {
      RateCurve c = gaussian_curve(s, 0.3 + 0.2 * s, grid);
      for (auto& p : c.points) p.rate = std::max(0.0, p.rate + noise(gen));
      curves.push_back(c);
    }
    const double total = 4.0 * 1e3 * dbm_to_watt(-3.0);
    const FdpaAllocation a = fdpa_allocate(curves, total);
    double uniform_obj = 0.0;
    for (const RateCurve& c : curves) uniform_obj += c.rate_at(total / 4.0);
    CHECK(a.objective >= uniform_obj - 1e-12);
  }
}

TEST_CASE("greedy matches the exhaustive oracle on small concave instances") {
  const std::vector<double> grid = dbm_grid(-12.0, 6.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<RateCurve> curves;
    for (int s = 1; s <= 3; ++s)
      curves.push_back(gaussian_curve(s, 0.2 + 0.3 * s + 0.1 * trial, grid));
    const double total = 3.0;
    std::vector<std::size_t> best;
    const double oracle = exhaustive_best(curves, total, 20, best);
    const FdpaAllocation a = fdpa_allocate(curves, total, 20);
    CHECK(a.objective == doctest::Approx(oracle).epsilon(1e-12));
    const double q = total / 20.0;
    for (std::size_t s = 0; s < 3; ++s)
      CHECK(std::abs(a.powers_mw[s] - static_cast<double>(best[s]) * q) <
            1e-9);
  }
}

TEST_CASE("allocation is equivariant under subcarrier relabeling") {
  const std::vector<double> grid = dbm_grid(-10.0, 4.0, 1.0);
  std::vector<RateCurve> curves;
  for (int s = 1; s <= 4; ++s)
    curves.push_back(gaussian_curve(s, 0.2 * s, grid));
  const double total = 3.0;
  const FdpaAllocation a = fdpa_allocate(curves, total);
  std::vector<RateCurve> rev(curves.rbegin(), curves.rend());
  const FdpaAllocation b = fdpa_allocate(rev, total);
  for (std::size_t s = 0; s < 4; ++s)
    CHECK(a.powers_mw[s] == doctest::Approx(b.powers_mw[3 - s]).epsilon(1e-9));
}

TEST_CASE("below-grid totals are flagged") {
  const std::vector<double> grid = dbm_grid(0.0, 6.0, 1.0);
  std::vector<RateCurve> curves{gaussian_curve(1, 0.5, grid),
                                gaussian_curve(2, 0.5, grid)};
  const FdpaAllocation a = fdpa_allocate(curves, 0.5);
  CHECK(a.below_grid);
}

TEST_CASE("curve building and iteration against an analytic pipeline") {
  // per-subcarrier Gaussian channels with different noise floors
  const std::vector<double> noise{0.2, 0.5, 0.9};
  SweepRateFn fn = [&](const std::vector<double>& powers) {
    std::vector<double> rates(powers.size());
    for (std::size_t s = 0; s < powers.size(); ++s)
      rates[s] = std::log2(1.0 + powers[s] / noise[s]);
    return rates;
  };
  const std::vector<double> grid = dbm_grid(-12.0, 4.0, 1.0);
  const std::vector<RateCurve> curves = build_rate_curves(fn, 3, grid);
  REQUIRE(curves.size() == 3);
  CHECK(curves[1].points.size() == grid.size());
  CHECK(curves[1].points[3].rate ==
        doctest::Approx(std::log2(1.0 + grid[3] / 0.5)));

  const double total = 2.4;
  const std::vector<double> r0 = iterate_allocation(fn, 3, grid, total, 0);
  for (double p : r0) CHECK(p == doctest::Approx(total / 3.0));

  const std::vector<double> r1 = iterate_allocation(fn, 3, grid, total, 1);
  double sum = 0.0, obj1 = 0.0, obj0 = 0.0;
  for (std::size_t s = 0; s < 3; ++s) {
    sum += r1[s];
    obj1 += std::log2(1.0 + r1[s] / noise[s]);
    obj0 += std::log2(1.0 + total / 3.0 / noise[s]);
  }
  CHECK(sum == doctest::Approx(total).epsilon(1e-14));
  CHECK(obj1 >= obj0 - 1e-9);
  // true water-filling favors the quieter subcarriers
  CHECK(r1[0] > r1[2]);
}

TEST_CASE("curves CSV round trip reproduces the allocation") {
  const std::vector<double> grid = dbm_grid(-8.0, 2.0, 1.0);
  std::vector<RateCurve> curves;
  for (int s = 1; s <= 4; ++s)
    curves.push_back(gaussian_curve(s, 0.15 * s, grid));
  std::ostringstream os;
  curves_to_csv(os, curves);
  std::istringstream is(os.str());
  const std::vector<RateCurve> back = curves_from_csv(is);
  REQUIRE(back.size() == curves.size());
  const FdpaAllocation a = fdpa_allocate(curves, 1.7);
  const FdpaAllocation b = fdpa_allocate(back, 1.7);
  for (std::size_t s = 0; s < 4; ++s)
    CHECK(a.powers_mw[s] == doctest::Approx(b.powers_mw[s]).epsilon(1e-9));

  std::istringstream bad("wrong,header\n");
  CHECK_THROWS_AS(curves_from_csv(bad), Error);
}

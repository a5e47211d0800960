#include "dpwdm/fdpa.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace dpwdm {

namespace {

/// Pool-adjacent-violators projection onto non-increasing sequences,
/// guarding the greedy allocator against Monte-Carlo dips in the marginals.
void isotonic_nonincreasing(std::vector<double>& v) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (double x : v) {
    blocks.push_back({x, 1});
    while (blocks.size() > 1) {
      const Block& a = blocks[blocks.size() - 2];
      const Block& b = blocks.back();
      if (a.sum * static_cast<double>(b.count) >=
          b.sum * static_cast<double>(a.count))
        break;
      blocks[blocks.size() - 2] = {a.sum + b.sum, a.count + b.count};
      blocks.pop_back();
    }
  }
  std::size_t i = 0;
  for (const Block& b : blocks) {
    const double mean = b.sum / static_cast<double>(b.count);
    for (std::size_t k = 0; k < b.count; ++k) v[i++] = mean;
  }
}

}  // namespace

void RateCurve::validate() const {
  if (points.size() < 2)
    throw Error("RateCurve: need at least two operating points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].power_mw <= 0.0)
      throw Error("RateCurve: operating powers must be positive");
    if (i > 0 && points[i].power_mw <= points[i - 1].power_mw)
      throw Error("RateCurve: operating powers must be strictly increasing");
  }
}

double RateCurve::rate_at(double power_mw) const {
  validate();
  if (power_mw <= 0.0) return 0.0;
  const double p0 = points.front().power_mw;
  if (power_mw <= p0)
    return points.front().rate * power_mw / p0;  // linear drop to (0, 0)
  if (power_mw >= points.back().power_mw) return points.back().rate;
  const double dbm = watt_to_dbm(1e-3 * power_mw);
  std::size_t i = 1;
  while (points[i].power_mw < power_mw) ++i;
  const double d0 = watt_to_dbm(1e-3 * points[i - 1].power_mw);
  const double d1 = watt_to_dbm(1e-3 * points[i].power_mw);
  const double t = (dbm - d0) / (d1 - d0);
  return points[i - 1].rate + t * (points[i].rate - points[i - 1].rate);
}

std::vector<RateCurve> build_rate_curves(const SweepRateFn& fn,
                                         std::size_t subcarriers,
                                         const std::vector<double>& grid_mw) {
  if (subcarriers == 0) throw Error("build_rate_curves: no subcarriers");
  if (grid_mw.size() < 2)
    throw Error("build_rate_curves: need at least two grid powers");
  if (!std::is_sorted(grid_mw.begin(), grid_mw.end()))
    throw Error("build_rate_curves: grid powers must be sorted");
  std::vector<RateCurve> curves(subcarriers);
  for (std::size_t s = 0; s < subcarriers; ++s)
    curves[s].subcarrier = static_cast<int>(s) + 1;
  for (double g : grid_mw) {
    const std::vector<double> rates =
        fn(std::vector<double>(subcarriers, g));
    if (rates.size() != subcarriers)
      throw Error("build_rate_curves: pipeline returned wrong rate count");
    for (std::size_t s = 0; s < subcarriers; ++s)
      curves[s].points.push_back({g, rates[s]});
  }
  for (const RateCurve& c : curves) c.validate();
  return curves;
}

FdpaAllocation fdpa_allocate(const std::vector<RateCurve>& curves,
                             double total_mw, std::size_t quanta) {
  if (curves.empty()) throw Error("fdpa_allocate: no curves");
  if (total_mw <= 0.0) throw Error("fdpa_allocate: total power must be > 0");
  if (quanta < 1) throw Error("fdpa_allocate: need at least one quantum");
  const std::size_t s_count = curves.size();
  const double q = total_mw / static_cast<double>(quanta);

  FdpaAllocation out;
  for (const RateCurve& c : curves) {
    c.validate();
    if (total_mw / static_cast<double>(s_count) < c.points.front().power_mw)
      out.below_grid = true;
  }

  // marginal rate of each quantum, smoothed to be non-increasing per curve
  struct Item {
    double marginal;
    std::size_t curve, index;
  };
  std::vector<Item> items;
  items.reserve(s_count * quanta);
  for (std::size_t s = 0; s < s_count; ++s) {
    std::vector<double> marg(quanta);
    double prev = 0.0;
    for (std::size_t i = 0; i < quanta; ++i) {
      const double r = curves[s].rate_at(static_cast<double>(i + 1) * q);
      marg[i] = r - prev;
      prev = r;
    }
    isotonic_nonincreasing(marg);
    for (std::size_t i = 0; i < quanta; ++i) items.push_back({marg[i], s, i});
  }
  // Equal marginals are common: the dBm-linear interpolant is not concave
  // in mW, so the isotonic guard pools whole segments into flat blocks.
  // Ordering ties by quantum index first spreads a partially selected block
  // evenly over the curves; the curve index only breaks exact-(value, index)
  // ties.
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.marginal != b.marginal) return a.marginal > b.marginal;
    if (a.index != b.index) return a.index < b.index;
    return a.curve < b.curve;
  });

  std::vector<std::size_t> counts(s_count, 0);
  for (std::size_t i = 0; i < quanta; ++i) ++counts[items[i].curve];

  out.powers_mw.resize(s_count);
  double assigned = 0.0;
  for (std::size_t s = 0; s + 1 < s_count; ++s) {
    out.powers_mw[s] = static_cast<double>(counts[s]) * q;
    assigned += out.powers_mw[s];
  }
  out.powers_mw[s_count - 1] = total_mw - assigned;  // exact sum constraint
  for (std::size_t s = 0; s < s_count; ++s)
    out.objective += curves[s].rate_at(out.powers_mw[s]);
  return out;
}

std::vector<double> iterate_allocation(const SweepRateFn& fn,
                                       std::size_t subcarriers,
                                       const std::vector<double>& grid_mw,
                                       double total_mw, int rounds) {
  if (subcarriers == 0) throw Error("iterate_allocation: no subcarriers");
  if (rounds < 0) throw Error("iterate_allocation: negative round count");
  const double uniform = total_mw / static_cast<double>(subcarriers);
  std::vector<double> powers(subcarriers, uniform);
  for (int round = 0; round < rounds; ++round) {
    std::vector<RateCurve> curves(subcarriers);
    for (std::size_t s = 0; s < subcarriers; ++s)
      curves[s].subcarrier = static_cast<int>(s) + 1;
    for (double g : grid_mw) {
      // sweep along the current allocation direction; subcarriers at zero
      // power keep a small floor so their curve stays well defined
      std::vector<double> point(subcarriers);
      for (std::size_t s = 0; s < subcarriers; ++s)
        point[s] = std::max(powers[s], 1e-6 * total_mw) * g / uniform;
      const std::vector<double> rates = fn(point);
      if (rates.size() != subcarriers)
        throw Error("iterate_allocation: pipeline returned wrong rate count");
      for (std::size_t s = 0; s < subcarriers; ++s)
        curves[s].points.push_back({point[s], rates[s]});
    }
    powers = fdpa_allocate(curves, total_mw).powers_mw;
  }
  return powers;
}

void curves_to_csv(std::ostream& os, const std::vector<RateCurve>& curves) {
  os << "subcarrier,power_mw,rate_bits\n";
  for (const RateCurve& c : curves)
    for (const RateCurve::Point& p : c.points)
      os << c.subcarrier << ',' << p.power_mw << ',' << p.rate << '\n';
}

std::vector<RateCurve> curves_from_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "subcarrier,power_mw,rate_bits")
    throw Error("curves_from_csv: bad header");
  std::map<int, RateCurve> by_id;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    RateCurve::Point p;
    int id = 0;
    if (!std::getline(row, cell, ',')) throw Error("curves_from_csv: bad row");
    id = std::stoi(cell);
    if (!std::getline(row, cell, ',')) throw Error("curves_from_csv: bad row");
    p.power_mw = std::stod(cell);
    if (!std::getline(row, cell, ',')) throw Error("curves_from_csv: bad row");
    p.rate = std::stod(cell);
    by_id[id].subcarrier = id;
    by_id[id].points.push_back(p);
  }
  std::vector<RateCurve> curves;
  for (auto& [id, c] : by_id) {
    c.validate();
    curves.push_back(std::move(c));
  }
  return curves;
}

}  // namespace dpwdm

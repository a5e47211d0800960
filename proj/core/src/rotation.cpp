#include "dpwdm/rotation.hpp"

#include <algorithm>
#include <cmath>

namespace dpwdm {

namespace {

const cplx kImag{0.0, 1.0};

Mat2 adjoint(const Mat2& u) {
  return {std::conj(u.m00), std::conj(u.m10), std::conj(u.m01),
          std::conj(u.m11)};
}

Mat2 inverse(const Mat2& u) {
  const cplx det = u.m00 * u.m11 - u.m01 * u.m10;
  return {u.m11 / det, -u.m01 / det, -u.m10 / det, u.m00 / det};
}

/// Lower Cholesky factor of the symmetric Toeplitz matrix with first column
/// r[0..n-1]; throws naming the first non-positive pivot.
std::vector<double> toeplitz_cholesky(const std::vector<double>& r,
                                      std::size_t n) {
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      a[i * n + j] = r[i - j];
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t p = 0; p < j; ++p) d -= a[j * n + p] * a[j * n + p];
    if (d <= 0.0)
      throw Error("ar_fit: covariance matrix is not positive definite "
                  "(pivot " +
                  std::to_string(j) + " is " + std::to_string(d) + ")");
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t p = 0; p < j; ++p) s -= a[i * n + p] * a[j * n + p];
      a[i * n + j] = s / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  return a;
}

double ar_predict(const std::vector<double>& coeffs,
                  const std::vector<double>& hist) {
  double s = 0.0;
  const std::size_t mu = coeffs.size();
  for (std::size_t p = 1; p <= mu; ++p) s += coeffs[p - 1] * hist[mu - p];
  return s;
}

cplx ar_predict_c(const std::vector<double>& coeffs,
                  const std::vector<cplx>& hist) {
  cplx s{0.0, 0.0};
  const std::size_t mu = coeffs.size();
  for (std::size_t p = 1; p <= mu; ++p) s += coeffs[p - 1] * hist[mu - p];
  return s;
}

void push_back_drop_front(std::vector<double>& v, double x) {
  std::rotate(v.begin(), v.begin() + 1, v.end());
  v.back() = x;
}

void push_back_drop_front(std::vector<cplx>& v, cplx x) {
  std::rotate(v.begin(), v.begin() + 1, v.end());
  v.back() = x;
}

}  // namespace

double unitarity_error(const Mat2& u) {
  const Mat2 g = adjoint(u) * u;
  return std::max({std::abs(g.m00 - 1.0), std::abs(g.m01), std::abs(g.m10),
                   std::abs(g.m11 - 1.0)});
}

Mat2 unitarize(const Mat2& u) {
  // Newton iteration toward the polar factor; quadratic convergence from any
  // near-unitary start.
  Mat2 x = u;
  for (int it = 0; it < 4; ++it) {
    const Mat2 inv_h = inverse(adjoint(x));
    x = {0.5 * (x.m00 + inv_h.m00), 0.5 * (x.m01 + inv_h.m01),
         0.5 * (x.m10 + inv_h.m10), 0.5 * (x.m11 + inv_h.m11)};
    if (unitarity_error(x) < 1e-15) break;
  }
  return x;
}

Mat2 rotation_matrix(double theta, double theta_bar, cplx psi) {
  const double half_tr = 0.5 * (theta + theta_bar);
  const double a = 0.5 * (theta - theta_bar);
  const double d = std::sqrt(a * a + std::norm(psi));
  const double c = std::cos(d);
  const double s = d > 1e-30 ? std::sin(d) / d : 1.0;
  const cplx phase = std::polar(1.0, half_tr);
  return {phase * (c + kImag * s * a), phase * (kImag * s * psi),
          phase * (kImag * s * std::conj(psi)), phase * (c - kImag * s * a)};
}

Mat2 irrps_sample(double sigma_a, Rng& rng) {
  if (sigma_a < 0.0) throw Error("irrps_sample: negative increment deviation");
  const double a1 = sigma_a * rng.gaussian();
  const double a2 = sigma_a * rng.gaussian();
  const double a3 = sigma_a * rng.gaussian();
  // a1 s1 + a2 s2 + a3 s3 = [[a3, a1 - j a2], [a1 + j a2, -a3]]
  return rotation_matrix(a3, -a3, cplx{a1, -a2});
}

void pd_step(PdState& state, const PdParams& p, Rng& rng) {
  state.theta += p.sigma_delta * rng.gaussian();
  state.j = irrps_sample(p.sigma_a, rng) * state.j;
  if (++state.steps % 10000 == 0) state.j = unitarize(state.j);
}

Mat2 pd_matrix(const PdState& state) {
  const cplx ph = std::polar(1.0, state.theta);
  return {ph * state.j.m00, ph * state.j.m01, ph * state.j.m10,
          ph * state.j.m11};
}

ArFit ar_fit(const std::vector<double>& cov_first_column) {
  if (cov_first_column.empty())
    throw Error("ar_fit: empty covariance sequence");
  const std::size_t mu = cov_first_column.size() - 1;
  ArFit fit;
  if (mu == 0) {
    if (cov_first_column[0] < 0.0)
      throw Error("ar_fit: covariance matrix is not positive definite "
                  "(pivot 0 is " +
                  std::to_string(cov_first_column[0]) + ")");
    fit.innovation_sd = std::sqrt(cov_first_column[0]);
    return fit;
  }
  // full (mu+1) Cholesky also certifies positive definiteness of C22
  toeplitz_cholesky(cov_first_column, mu + 1);

  // solve C22 g = c21 with C22 the mu x mu Toeplitz block, c21 = r[1..mu]
  const std::vector<double> l = toeplitz_cholesky(cov_first_column, mu);
  std::vector<double> y(mu);
  for (std::size_t i = 0; i < mu; ++i) {
    double s = cov_first_column[i + 1];
    for (std::size_t j = 0; j < i; ++j) s -= l[i * mu + j] * y[j];
    y[i] = s / l[i * mu + i];
  }
  fit.coeffs.assign(mu, 0.0);
  for (std::size_t ii = mu; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < mu; ++j)
      s -= l[j * mu + ii] * fit.coeffs[j];
    fit.coeffs[ii] = s / l[ii * mu + ii];
  }
  double var = cov_first_column[0];
  for (std::size_t p = 0; p < mu; ++p)
    var -= fit.coeffs[p] * cov_first_column[p + 1];
  fit.innovation_sd = std::sqrt(std::max(var, 0.0));
  return fit;
}

void MrParams::validate() const {
  if (ar_coeffs.size() != memory || psi_ar_coeffs.size() != memory)
    throw Error("MrParams: coefficient count does not match the memory");
  if (innovation_sd < 0.0 || psi_innovation_sd < 0.0)
    throw Error("MrParams: negative innovation deviation");
  if (cov_phi.size() != memory + 1 || cov_psi.size() != memory + 1)
    throw Error("MrParams: fit-target length does not match the memory");
}

MrParams mr_from_moments(const MomentSet& m, std::size_t mu) {
  if (m.r_theta.size() < mu + 1 || m.r_psi.size() < mu + 1)
    throw Error("mr_from_moments: moments cover too few lags");
  MrParams p;
  p.memory = mu;
  p.cov_phi.resize(mu + 1);
  p.cov_psi.resize(mu + 1);
  for (std::size_t l = 0; l <= mu; ++l) {
    p.cov_phi[l] = m.r_theta[l] / 5.0;
    p.cov_psi[l] = m.r_psi[l].real();
  }
  ArFit phi = ar_fit(p.cov_phi);
  ArFit psi = ar_fit(p.cov_psi);
  p.ar_coeffs = std::move(phi.coeffs);
  p.innovation_sd = phi.innovation_sd;
  p.psi_ar_coeffs = std::move(psi.coeffs);
  p.psi_innovation_sd = psi.innovation_sd;
  return p;
}

MrState mr_init_zero(const MrParams& p) {
  MrState s;
  s.phi.assign(p.memory, 0.0);
  s.phi_bar.assign(p.memory, 0.0);
  s.psi.assign(p.memory, cplx{0.0, 0.0});
  return s;
}

MrState mr_init_stationary(const MrParams& p, Rng& rng) {
  p.validate();
  MrState s = mr_init_zero(p);
  if (p.memory == 0) return s;
  const std::size_t mu = p.memory;
  const std::vector<double> l_phi = toeplitz_cholesky(p.cov_phi, mu);
  const std::vector<double> l_psi = toeplitz_cholesky(p.cov_psi, mu);
  auto draw_real = [&](const std::vector<double>& l, std::vector<double>& out) {
    std::vector<double> z(mu);
    for (auto& x : z) x = rng.gaussian();
    for (std::size_t i = 0; i < mu; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j <= i; ++j) v += l[i * mu + j] * z[j];
      out[i] = v;
    }
  };
  draw_real(l_phi, s.phi);
  draw_real(l_phi, s.phi_bar);
  std::vector<double> re(mu), im(mu);
  // proper complex: independent real and imaginary parts with half the
  // covariance each
  std::vector<double> half(p.cov_psi.begin(), p.cov_psi.end());
  for (auto& v : half) v *= 0.5;
  const std::vector<double> l_half = toeplitz_cholesky(half, mu);
  draw_real(l_half, re);
  draw_real(l_half, im);
  for (std::size_t i = 0; i < mu; ++i) s.psi[i] = {re[i], im[i]};
  return s;
}

Mat2 mr_step(MrState& state, const MrParams& p, Rng& rng) {
  const double phi = ar_predict(p.ar_coeffs, state.phi) +
                     p.innovation_sd * rng.gaussian();
  const double phi_bar = ar_predict(p.ar_coeffs, state.phi_bar) +
                         p.innovation_sd * rng.gaussian();
  const cplx psi = ar_predict_c(p.psi_ar_coeffs, state.psi) +
                   rng.cscg(p.psi_innovation_sd * p.psi_innovation_sd);
  if (p.memory > 0) {
    push_back_drop_front(state.phi, phi);
    push_back_drop_front(state.phi_bar, phi_bar);
    push_back_drop_front(state.psi, psi);
  }
  return rotation_matrix(p.s_phi * (2.0 * phi + phi_bar),
                         p.s_phi * (phi + 2.0 * phi_bar), p.s_psi * psi);
}

void WhitenFilter::validate() const {
  if (taps.empty() || taps.size() != taps_bar.size())
    throw Error("WhitenFilter: need equally many taps per polarization");
  double n1 = 0.0, n2 = 0.0;
  for (double h : taps) n1 += h * h;
  for (double h : taps_bar) n2 += h * h;
  if (std::abs(n1 - 1.0) > 1e-9 || std::abs(n2 - 1.0) > 1e-9)
    throw Error("WhitenFilter: taps must have unit norm");
}

WhitenFilter symmetric3_whitener(double h2) {
  const double norm = std::sqrt(1.0 + 2.0 * h2 * h2);
  WhitenFilter f;
  f.taps = {h2 / norm, 1.0 / norm, h2 / norm};
  f.taps_bar = f.taps;
  return f;
}

SymbolBlock whiten(const SymbolBlock& block, const WhitenFilter& f) {
  f.validate();
  block.validate();
  const std::size_t l = f.taps.size();
  if (block.size() < l)
    throw Error("whiten: block shorter than the filter");
  SymbolBlock out;
  out.energy_per_symbol = block.energy_per_symbol;
  const std::size_t n = block.size() - l + 1;
  out.pol1.resize(n);
  out.pol2.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    cplx a1{0.0, 0.0}, a2{0.0, 0.0};
    for (std::size_t i = 0; i < l; ++i) {
      a1 += f.taps[i] * block.pol1[m + l - 1 - i];
      a2 += f.taps_bar[i] * block.pol2[m + l - 1 - i];
    }
    out.pol1[m] = a1;
    out.pol2[m] = a2;
  }
  return out;
}

}  // namespace dpwdm

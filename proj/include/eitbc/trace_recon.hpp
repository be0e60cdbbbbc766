#pragma once
// Recovery of the conductivity trace on the measurement circle from a DN
// matrix, using oscillating cut-off functions
//     h_{M,beta}(theta) = e^{iM theta} eta(theta - beta),
//     g(beta) ~ Re <h, L h> / M.
// eta is supported on |theta| < pi/(2 kappa) and normalized so that
// int eta^2 dtheta = 1.

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "eitbc/boundary_basis.hpp"
#include "eitbc/error.hpp"

namespace eitbc {

struct CutoffParams {
  int kappa = 6;
  int alpha = 4;
  double d = 0.0; // filled by normalized()
  int M = 32;
  int n_angles = 100;
  //! Energy fraction of eta allowed outside the effective band used by the
  //! anti-aliasing guard.
  double band_energy_tail = 1e-4;
  //! Number of Fourier modes kept when smoothing the recovered trace.
  int smooth_modes = 16;

  double support_half_width() const { return pi / (2.0 * kappa); }
};

namespace detail {

inline double eta_shape(double theta, int kappa, int alpha) {
  const double a = kappa * theta - pi / 2.0, b = kappa * theta + pi / 2.0;
  return std::pow(a, alpha) * std::pow(b, alpha) * std::cos(kappa * theta);
}

inline double wrap_angle(double t) {
  t = std::remainder(t, 2.0 * pi);
  return t;
}

} // namespace detail

//! Params with d fixed by int eta^2 = 1.
inline CutoffParams normalized(CutoffParams p) {
  if (p.kappa < 1 || p.alpha < 1)
    throw InvalidArgument("CutoffParams: need kappa >= 1 and alpha >= 1");
  if (p.alpha % 2 != 0)
    throw InvalidArgument("CutoffParams: odd alpha makes eta change sign");
  const double w = p.support_half_width();
  auto sq = [&](double t) {
    const double e = detail::eta_shape(t, p.kappa, p.alpha);
    return e * e;
  };
  const double I2 = 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(sq, 0.0, w, 15, 1e-15);
  p.d = 1.0 / std::sqrt(I2);
  return p;
}

inline double cutoff_eta(double theta, const CutoffParams &p) {
  const double t = detail::wrap_angle(theta);
  if (std::abs(t) >= p.support_half_width())
    return 0.0;
  return p.d * detail::eta_shape(t, p.kappa, p.alpha);
}

//! int eta(theta) e^{-im theta} dtheta (real, eta being even).
inline double eta_hat(int m, const CutoffParams &p) {
  const double w = p.support_half_width();
  auto f = [&](double t) { return p.d * detail::eta_shape(t, p.kappa, p.alpha) * std::cos(m * t); };
  // The integrand is analytic on [0, w]; composite Gauss-Legendre with enough
  // panels to resolve cos(m t) is exact to rounding.
  const int panels = 8 + std::abs(m) / 4;
  double s = 0.0;
  for (int k = 0; k < panels; ++k)
    s += boost::math::quadrature::gauss<double, 30>::integrate(f, w * k / panels, w * (k + 1) / panels);
  return 2.0 * s;
}

//! Smallest B with sum_{|m|<=B} |eta_hat(m)|^2 / 2pi >= 1 - band_energy_tail.
inline int eta_bandwidth(const CutoffParams &p, int max_modes = 512) {
  double e = eta_hat(0, p) * eta_hat(0, p) / (2.0 * pi);
  for (int B = 0; B <= max_modes; ++B) {
    if (B > 0) {
      const double h = eta_hat(B, p);
      e += 2.0 * h * h / (2.0 * pi);
    }
    if (e >= 1.0 - p.band_energy_tail)
      return B;
  }
  throw Error("eta_bandwidth: band not found below " + std::to_string(max_modes) + " modes");
}

struct TraceResult {
  std::vector<double> betas;
  std::vector<double> values;          // g(beta)
  std::vector<double> imag_residual;   // Im <h, L h> / M
  FourierVector smoothed;              // first smooth_modes Fourier modes of g
  double radius = 1.0;

  //! Smoothed trace at angle theta.
  double operator()(double theta) const { return synthesize_at(smoothed, theta).real(); }

  double mean() const {
    double s = 0.0;
    for (double v : values)
      s += v;
    return s / double(values.size());
  }
};

//! Coefficients of h_{M,beta} in the full basis of half order N on radius r.
inline FourierVector oscillating_cutoff_coeffs(double beta, double r, int N, const CutoffParams &p,
                                               const std::vector<double> &eta_hat_table, int table_offset) {
  FourierVector h(r, N);
  const double s = std::sqrt(r / (2.0 * pi));
  for (int n = -N; n <= N; ++n) {
    const int m = n - p.M;
    const int idx = m + table_offset;
    const double eh = (idx >= 0 && idx < int(eta_hat_table.size())) ? eta_hat_table[idx] : eta_hat(m, p);
    h.mode_ref(n) = s * std::polar(1.0, double(p.M - n) * beta) * eh;
  }
  return h;
}

//! Trace estimate from a DN matrix (zero-block convention) on radius L.out_radius.
inline TraceResult recover_trace(const BoundaryOperatorMatrix &L, CutoffParams p) {
  if (L.kind != OperatorKind::DN)
    throw InvalidArgument("recover_trace: expects a DN matrix");
  if (p.n_angles < 1 || p.M < 1)
    throw InvalidArgument("recover_trace: need M >= 1 and n_angles >= 1");
  if (p.d == 0.0)
    p = normalized(p);
  const int N = L.half_order;
  const int B = eta_bandwidth(p);
  if (N < p.M + B)
    throw InvalidArgument("recover_trace: basis half order " + std::to_string(N) + " cannot carry h_{M,beta} (M=" +
                          std::to_string(p.M) + " plus cut-off bandwidth " + std::to_string(B) + " = " +
                          std::to_string(p.M + B) + "); raise the simulation basis or lower M");
  const double r = L.out_radius;
  const int offset = N + p.M;
  std::vector<double> table(2 * N + 1);
  for (int n = -N; n <= N; ++n)
    table[n - p.M + offset] = eta_hat(n - p.M, p);

  TraceResult out;
  out.radius = r;
  for (int j = 0; j < p.n_angles; ++j) {
    const double beta = 2.0 * pi * j / p.n_angles;
    const FourierVector h = oscillating_cutoff_coeffs(beta, r, N, p, table, offset);
    const cplx q = h.coeffs.dot(L.entries * h.coeffs) / double(p.M);
    out.betas.push_back(beta);
    out.values.push_back(q.real());
    out.imag_residual.push_back(q.imag());
  }
  const int S = std::min(p.smooth_modes, (p.n_angles - 2) / 4);
  out.smoothed = project(std::span<const double>(out.values), r, S);
  for (int n = 0; n <= S; ++n) { // enforce an exactly real trace
    const cplx a = 0.5 * (out.smoothed.mode(n) + std::conj(out.smoothed.mode(-n)));
    out.smoothed.mode_ref(n) = a;
    out.smoothed.mode_ref(-n) = std::conj(a);
  }
  return out;
}

} // namespace eitbc

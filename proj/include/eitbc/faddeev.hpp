#pragma once
// Faddeev Green's function and the single-layer operator on a circle.
//
// With x, k identified with complex numbers,
//     G_k(x) = e^{ikx} g_k(x) = (1/2pi) Re E1(-ikx),
// where E1 is the exponential integral (principal branch; its real part is
// continuous across the cut).  g_k(x) = g_1(kx) follows from the complex
// product in the exponent.
//
// The remainder H_k(z) = G_k(z) + (1/2pi) log|z| is the real part of an
// entire series sum_n a_n z^n with
//     a_0 = -(gamma_E + log|k|) / (2pi),   a_n = -(ik)^n / (2pi n n!),
// so on a circle every Fourier-Fourier entry of the remainder is a single
// closed-form term.  single_layer_matrix uses that by default; the periodic
// trapezoid route is kept for cross-checks.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "eitbc/boundary_basis.hpp"
#include "eitbc/error.hpp"

namespace eitbc {

inline constexpr double k_min_default = 1e-3;
inline constexpr double z_min_default = 1e-12;

namespace special {

inline constexpr long double euler_gamma_l = 0.577215664901532860606512090082402431L;

// sum_{j>=1} (-1)^{j+1} w^j / (j j!), accumulated in extended precision.
inline std::complex<long double> e1_series_tail(std::complex<double> wd) {
  const std::complex<long double> w(wd.real(), wd.imag());
  std::complex<long double> term = w; // (-1)^{j+1} w^j / j!
  std::complex<long double> sum = w;
  const long double aw = std::abs(w);
  for (int j = 2; j < 500; ++j) {
    term *= -w / static_cast<long double>(j);
    const auto add = term / static_cast<long double>(j);
    sum += add;
    if (std::abs(add) <= 1e-21L * std::abs(sum) && j > aw)
      break;
  }
  return sum;
}

// e^w E1(w) by the modified Lentz continued fraction
//   E1(w) = e^{-w} / (w + 1/(1 + 1/(w + 2/(1 + 2/(w + ...))))).
inline std::complex<double> scaled_e1_cf(std::complex<double> w) {
  using C = std::complex<double>;
  const double tiny = 1e-300;
  // even form: e^w E1(w) = 1/(w+1- 1^2/(w+3- 2^2/(w+5- ...)))
  C b = w + 1.0;
  C c = 1.0 / tiny;
  C d = 1.0 / b;
  C h = d;
  for (int i = 1; i < 100000; ++i) {
    const double a = -double(i) * double(i);
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const C del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16)
      return h;
  }
  throw ConvergenceError("scaled_e1_cf: continued fraction did not converge", {});
}

inline bool use_series(std::complex<double> w) {
  const double a = std::abs(w);
  if (a <= 2.0)
    return true;
  // near the negative real axis the fraction converges slowly; the series
  // suffers cancellation ~ e^{|w| + Re w}, harmless while that is modest
  return w.real() < 0.0 && a + w.real() < 12.0 && a < 60.0;
}

} // namespace special

//! Exponential integral E1(w) for complex w != 0 (principal branch).
inline std::complex<double> expint_e1(std::complex<double> w) {
  if (w == std::complex<double>(0.0))
    throw InvalidArgument("expint_e1: logarithmic singularity at 0");
  if (special::use_series(w)) {
    const std::complex<long double> wl(w.real(), w.imag());
    const auto s = -special::euler_gamma_l - std::log(wl) + special::e1_series_tail(w);
    return {double(s.real()), double(s.imag())};
  }
  return std::exp(-w) * special::scaled_e1_cf(w);
}

//! e^w E1(w), finite for large |w|.
inline std::complex<double> expint_e1_scaled(std::complex<double> w) {
  if (special::use_series(w))
    return std::exp(w) * expint_e1(w);
  return special::scaled_e1_cf(w);
}

//! G_k(z) = e^{ikz} g_k(z), real-valued.
inline double faddeev_G(cplx k, cplx z, double z_min = z_min_default) {
  if (std::abs(z) < z_min)
    throw InvalidArgument("faddeev_G: |z| below floor (logarithmic singularity)");
  if (std::abs(k) < k_min_default)
    throw InvalidArgument("faddeev_G: |k| below floor");
  return expint_e1(-I * k * z).real() / (2.0 * pi);
}

//! g_1(z).
inline cplx faddeev_g(cplx z, double z_min = z_min_default) {
  if (std::abs(z) < z_min)
    throw InvalidArgument("faddeev_g: |z| below floor (logarithmic singularity)");
  const cplx w = -I * z;
  if (special::use_series(w))
    return std::exp(-I * z) * expint_e1(w).real() / (2.0 * pi);
  // e^{-iz} Re E1(w) = (f + e^{-2i Re z} conj f) / 2 with f = e^w E1(w)
  const cplx f = special::scaled_e1_cf(w);
  return (f + std::polar(1.0, -2.0 * z.real()) * std::conj(f)) / (4.0 * pi);
}

//! g_k(x) = g_1(k x).
inline cplx faddeev_gk(cplx k, cplx x, double z_min = z_min_default) {
  if (std::abs(k) < k_min_default)
    throw InvalidArgument("faddeev_gk: |k| below floor");
  return faddeev_g(k * x, z_min);
}

//! H_k(z) = G_k(z) + (1/2pi) log|z|, smooth; H_k(0) = a_0.
inline double faddeev_H(cplx k, cplx z) {
  if (std::abs(k) < k_min_default)
    throw InvalidArgument("faddeev_H: |k| below floor");
  const cplx w = -I * k * z;
  if (std::abs(z) == 0.0)
    return -(std::numbers::egamma + std::log(std::abs(k))) / (2.0 * pi);
  if (special::use_series(w)) {
    const double tail = double(special::e1_series_tail(w).real());
    return (-std::numbers::egamma - std::log(std::abs(k)) + tail) / (2.0 * pi);
  }
  return (expint_e1(w).real() + std::log(std::abs(z))) / (2.0 * pi);
}

//! Matrix of <S_k phi_n, phi_l> on the circle of radius r.
struct SingleLayerMatrix {
  cplx k;
  double radius = 1.0;
  int half_order = 0;
  CMatrix entries;

  cplx operator()(int l, int n) const { return entries(l + half_order, n + half_order); }
};

enum class SingleLayerMethod { Series, Quadrature };

struct SingleLayerOptions {
  SingleLayerMethod method = SingleLayerMethod::Series;
  int quadrature_order = 0; // 0 picks one from |k| r and N
  double tolerance = 1e-8;  // quadrature order-doubling check, relative to max(1, max|S|)
};

//! Log-kernel part -(1/2pi) log|x-y|: diagonal r/(2|n|), and -r log r at n = 0.
inline CMatrix single_layer_log_part(double r, int N) {
  CMatrix S0 = CMatrix::Zero(2 * N + 1, 2 * N + 1);
  for (int n = -N; n <= N; ++n)
    S0(n + N, n + N) = n == 0 ? -r * std::log(r) : r / (2.0 * std::abs(n));
  return S0;
}

namespace detail {

inline CMatrix remainder_series(cplx k, double r, int N) {
  const int M = 2 * N;
  // a_n r^{n+1} pi, built recursively to avoid overflow of n!
  std::vector<cplx> b(M + 1);
  b[0] = pi * r * (-(std::numbers::egamma + std::log(std::abs(k))) / (2.0 * pi));
  cplx p = pi * r; // pi r (ik r)^n / n!
  for (int n = 1; n <= M; ++n) {
    p *= I * k * r / double(n);
    b[n] = -p / (2.0 * pi * double(n));
  }
  auto binom = [](int n, int j) {
    double c = 1.0;
    for (int i = 1; i <= j; ++i)
      c = c * (n - j + i) / i;
    return c;
  };
  CMatrix S = CMatrix::Zero(2 * N + 1, 2 * N + 1);
  for (int l = -N; l <= N; ++l)
    for (int np = -N; np <= N; ++np) {
      cplx v{};
      if (l >= 0 && np <= 0) {
        const int n = l - np;
        v += b[n] * binom(n, l) * ((n - l) % 2 ? -1.0 : 1.0);
      }
      if (l <= 0 && np >= 0) {
        const int n = np - l;
        v += std::conj(b[n]) * binom(n, -l) * ((n + l) % 2 ? -1.0 : 1.0);
      }
      S(l + N, np + N) = v;
    }
  return S;
}

inline CMatrix remainder_quadrature(cplx k, double r, int N, int Q) {
  // entry = (r / 2pi) (2pi/Q)^2 sum_{p,q} H(x_p - y_q) e^{-il theta_p} e^{in tau_q}
  Eigen::MatrixXcd Hm(Q, Q);
  for (int p = 0; p < Q; ++p) {
    const cplx xp = std::polar(r, 2.0 * pi * p / Q);
    for (int q = 0; q < Q; ++q) {
      const cplx yq = std::polar(r, 2.0 * pi * q / Q);
      Hm(p, q) = faddeev_H(k, xp - yq);
    }
  }
  Eigen::MatrixXcd Fl(2 * N + 1, Q), Fn(Q, 2 * N + 1);
  for (int l = -N; l <= N; ++l)
    for (int p = 0; p < Q; ++p) {
      Fl(l + N, p) = std::polar(1.0, -2.0 * pi * double(l) * p / Q);
      Fn(p, l + N) = std::polar(1.0, 2.0 * pi * double(l) * p / Q);
    }
  const double w = (r / (2.0 * pi)) * (2.0 * pi / Q) * (2.0 * pi / Q);
  return w * (Fl * Hm * Fn);
}

inline int default_quadrature_order(cplx k, double r, int N) {
  const int q = 2 * (2 * N + 1) + int(std::ceil(8.0 * std::abs(k) * r)) + 32;
  return q + (q % 2);
}

} // namespace detail

inline SingleLayerMatrix single_layer_matrix(cplx k, double r, int N, const SingleLayerOptions &opt = {}) {
  if (std::abs(k) < k_min_default)
    throw InvalidArgument("single_layer_matrix: |k| below floor");
  if (!(r > 0.0) || N < 0)
    throw InvalidArgument("single_layer_matrix: need r > 0 and N >= 0");
  SingleLayerMatrix S{k, r, N, single_layer_log_part(r, N)};
  if (opt.method == SingleLayerMethod::Series) {
    S.entries += detail::remainder_series(k, r, N);
    return S;
  }
  const int Q = opt.quadrature_order > 0 ? opt.quadrature_order : detail::default_quadrature_order(k, r, N);
  if (Q < 4 * N + 2)
    throw InvalidArgument("single_layer_matrix: quadrature order aliases the basis");
  const CMatrix A = detail::remainder_quadrature(k, r, N, Q);
  const CMatrix B = detail::remainder_quadrature(k, r, N, 2 * Q);
  const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  const double change = (A - B).cwiseAbs().maxCoeff() / scale;
  if (change > opt.tolerance)
    throw ConvergenceError("single_layer_matrix: quadrature not converged (change " + std::to_string(change) +
                               ")",
                           {change});
  S.entries += B;
  return S;
}

} // namespace eitbc

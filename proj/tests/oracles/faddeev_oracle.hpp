#pragma once
// Brute-force evaluation of
//     g_k(x) = (2 pi)^-2 int_{R^2} e^{i x.xi} / (|xi|^2 + 2k(xi_1 + i xi_2)) dxi
// in polar coordinates xi = rho e^{i phi}:
//     g_k(x) = (2 pi)^-2 int_0^{2 pi} I(a(phi), b(phi)) dphi,
//     I(a, b) = int_0^inf e^{i a rho} / (rho + b) drho,
// a = Re(conj(x) e^{i phi}), b = 2 k e^{i phi}.  The inner integral is moved
// onto a ray where e^{i a rho} decays, adding the residue at rho = -b when
// the pole is swept over; a pole on the positive real axis is taken in the
// principal-value sense (it is a single phi, handled as a breakpoint).

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

inline double angle_gap(double a, double b) {
  double d = std::remainder(a - b, 2.0 * pi);
  return std::abs(d);
}

//! int_0^inf e^{i a rho} / (rho + b) drho for a != 0.
inline cplx radial_integral(double a, cplx b) {
  const cplx p = -b;
  const double tp = std::arg(p);
  const double sgn = a > 0 ? 1.0 : -1.0;
  // candidate rays in the decaying half plane, pick the one farthest from the pole
  const double cands[3] = {sgn * pi / 6, sgn * pi / 2, sgn * 5 * pi / 6};
  double psi = cands[0], best = -1.0;
  for (double c : cands) {
    const double g = angle_gap(c, tp);
    if (g > best) {
      best = g;
      psi = c;
    }
  }
  const cplx e = std::polar(1.0, psi);
  const double decay = std::abs(a) * std::abs(std::sin(psi));
  // s = t / decay
  auto f = [&](double t) {
    const cplx rho = (t / decay) * e;
    return std::exp(cplx(0, a) * rho) / (rho + b) * e / decay;
  };
  boost::math::quadrature::exp_sinh<double> es(12);
  const double re = es.integrate([&](double t) { return f(t).real(); }, 1e-13);
  const double im = es.integrate([&](double t) { return f(t).imag(); }, 1e-13);
  cplx I(re, im);
  // residue correction when the pole lies strictly between the real axis and the ray
  const bool inside = sgn > 0 ? (tp > 0 && tp < psi) : (tp < 0 && tp > psi);
  if (inside && std::abs(p) > 0)
    I += sgn * 2.0 * pi * cplx(0, 1) * std::exp(cplx(0, a) * p);
  return I;
}

//! g_k(x) by nested quadrature; slow (about 0.1 s per value).
inline cplx faddeev_gk(cplx k, cplx x) {
  auto a_of = [&](double phi) { return (std::conj(x) * std::polar(1.0, phi)).real(); };
  std::vector<double> brk = {std::arg(x) + pi / 2, std::arg(x) - pi / 2, -std::arg(-k)};
  for (double &b : brk) {
    b = std::fmod(b, 2.0 * pi);
    if (b < 0)
      b += 2.0 * pi;
  }
  brk.push_back(0.0);
  brk.push_back(2.0 * pi);
  std::sort(brk.begin(), brk.end());
  boost::math::quadrature::tanh_sinh<double> ts(12);
  cplx total{};
  for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
    const double lo = brk[i], hi = brk[i + 1];
    if (hi - lo < 1e-14)
      continue;
    auto inner = [&](double phi) {
      const double a = a_of(phi);
      if (a == 0.0)
        return cplx{};
      return radial_integral(a, 2.0 * k * std::polar(1.0, phi));
    };
    const double re = ts.integrate([&](double phi) { return inner(phi).real(); }, lo, hi, 1e-11);
    const double im = ts.integrate([&](double phi) { return inner(phi).imag(); }, lo, hi, 1e-11);
    total += cplx(re, im);
  }
  return total / (4.0 * pi * pi);
}

} // namespace oracle

#pragma once
// Extension of a conductivity from the unit disc to a larger disc:
//     sigma(rho, theta)                      rho <= r1
//     (g(theta) - 1) f(rho) + 1              r1 < rho <= r_e
//     1                                      r_e < rho <= r2
// with the cubic bridge f(rho) = 1 - 3 s^2 + 2 s^3, s = (rho - r1)/(r_e - r1).

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "eitbc/boundary_basis.hpp"
#include "eitbc/conductivity.hpp"
#include "eitbc/error.hpp"

namespace eitbc {

struct BridgePoly {
  double r1 = 1.0, re = 1.175;
  std::array<double, 4> coeffs{1.0, 0.0, -3.0, 2.0}; // in powers of s

  double operator()(double rho) const {
    const double s = (rho - r1) / (re - r1);
    if (s <= 0.0)
      return 1.0;
    if (s >= 1.0)
      return 0.0;
    return coeffs[0] + s * (coeffs[1] + s * (coeffs[2] + s * coeffs[3]));
  }
  double derivative(double rho) const {
    const double s = (rho - r1) / (re - r1);
    if (s <= 0.0 || s >= 1.0)
      return 0.0;
    return (coeffs[1] + s * (2.0 * coeffs[2] + 3.0 * s * coeffs[3])) / (re - r1);
  }
};

inline BridgePoly bridge_poly(double r1, double re) {
  if (!(re > r1))
    throw InvalidArgument("bridge_poly: need r_e > r1");
  return BridgePoly{r1, re};
}

struct ExtensionSpec {
  double r1 = 1.0, re = 1.175, r2 = 1.2;
  FourierVector g; // real trace on the circle r1
  BridgePoly bridge;
};

//! Spec with r_e = r1 + fraction (r2 - r1).
inline ExtensionSpec make_extension_spec(const FourierVector &g, double r1 = 1.0, double r2 = 1.2,
                                         double re_fraction = 7.0 / 8.0) {
  if (!(r2 > r1) || !(re_fraction > 0.0 && re_fraction < 1.0))
    throw InvalidArgument("make_extension_spec: need r2 > r1 and 0 < fraction < 1");
  ExtensionSpec s;
  s.r1 = r1;
  s.r2 = r2;
  s.re = r1 + re_fraction * (r2 - r1);
  s.g = g;
  s.bridge = bridge_poly(r1, s.re);
  return s;
}

//! Constant trace c as a FourierVector on radius r.
inline FourierVector constant_trace(double c, double r, int N = 0) {
  FourierVector g(r, N);
  g.mode_ref(0) = c * std::sqrt(2.0 * pi * r);
  return g;
}

namespace detail {

// Dense angular table of the trace for fast evaluation (linear interpolation
// of a band-limited function on 4096 points).
struct TraceTable {
  std::vector<double> v;
  explicit TraceTable(const FourierVector &g, int n = 4096) : v(n + 1) {
    std::vector<double> th(n);
    for (int i = 0; i < n; ++i)
      th[i] = 2.0 * pi * i / n;
    const auto s = synthesize(g, th);
    for (int i = 0; i < n; ++i)
      v[i] = s[i].real();
    v[n] = v[0];
  }
  double operator()(double theta) const {
    const int n = int(v.size()) - 1;
    double t = theta / (2.0 * pi);
    t -= std::floor(t);
    const double x = t * n;
    const int i = std::min(int(x), n - 1);
    const double f = x - i;
    return (1.0 - f) * v[i] + f * v[i + 1];
  }
  double min() const { return *std::min_element(v.begin(), v.end()); }
};

} // namespace detail

//! The extended conductivity.  With sigma given the field covers the disc
//! of radius r2; otherwise it lives on the annulus r1 <= rho <= r2.
inline ConductivityField extend(const ExtensionSpec &spec, const std::optional<ConductivityField> &sigma = {}) {
  if (spec.g.reality_defect() > 1e-8 * std::max(1.0, spec.g.coeffs.cwiseAbs().maxCoeff()))
    throw InvalidArgument("extend: trace is not real-valued");
  auto table = std::make_shared<const detail::TraceTable>(spec.g);
  if (!(table->min() > 0.0))
    throw InvalidArgument("extend: trace g must be positive (minimum " + std::to_string(table->min()) + ")");
  const BridgePoly f = spec.bridge;
  const double r1 = spec.r1, re = spec.re;
  auto outer = [table, f, r1, re](double x, double y) {
    const double rho = std::hypot(x, y);
    if (rho > re)
      return 1.0;
    const double th = std::atan2(y, x);
    return ((*table)(th)-1.0) * f(std::max(rho, r1)) + 1.0;
  };
  if (!sigma)
    return ConductivityField(outer, Region::annulus(spec.r1, spec.r2), Smoothness::Piecewise);
  const ConductivityField s = *sigma;
  return ConductivityField(
      [s, outer, r1](double x, double y) { return std::hypot(x, y) <= r1 ? s(x, y) : outer(x, y); },
      Region::disc(spec.r2), Smoothness::Piecewise);
}

} // namespace eitbc

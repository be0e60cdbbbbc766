#pragma once
// Mode-by-mode solutions of div(sigma grad u) = 0 for radial sigma(rho).
// With u = f(rho) e^{in theta}, t = log rho, y1 = f and y2 = rho sigma f':
//     y1' = y2 / sigma,   y2' = sigma n^2 y1        (d/dt)
// integrated by classical RK4 in t.

#include <cmath>
#include <functional>

namespace oracle {

using Radial = std::function<double(double)>;

struct State {
  double y1, y2;
};

inline State rk4_modes(const Radial &sigma, int n, double rho_a, double rho_b, State s, int steps = 20000) {
  const double ta = std::log(rho_a), tb = std::log(rho_b), h = (tb - ta) / steps;
  const double n2 = double(n) * n;
  auto rhs = [&](double t, State y) {
    const double sg = sigma(std::exp(t));
    return State{y.y2 / sg, sg * n2 * y.y1};
  };
  double t = ta;
  for (int i = 0; i < steps; ++i) {
    const State k1 = rhs(t, s);
    const State k2 = rhs(t + h / 2, {s.y1 + h / 2 * k1.y1, s.y2 + h / 2 * k1.y2});
    const State k3 = rhs(t + h / 2, {s.y1 + h / 2 * k2.y1, s.y2 + h / 2 * k2.y2});
    const State k4 = rhs(t + h, {s.y1 + h * k3.y1, s.y2 + h * k3.y2});
    s.y1 += h / 6 * (k1.y1 + 2 * k2.y1 + 2 * k3.y1 + k4.y1);
    s.y2 += h / 6 * (k1.y2 + 2 * k2.y2 + 2 * k3.y2 + k4.y2);
    t += h;
  }
  return s;
}

//! DN eigenvalue of mode n on the disc of radius r: sigma f'(r) / f(r).
//! Uses the Riccati variable w = rho sigma f' / f, w' = sigma n^2 - w^2 / sigma,
//! started at the regular behaviour f ~ rho^|n| near the origin.
inline double disc_dn_eigenvalue(const Radial &sigma, int n, double r, int steps = 40000) {
  if (n == 0)
    return 0.0;
  const double rho0 = 1e-6 * r;
  const double ta = std::log(rho0), tb = std::log(r), h = (tb - ta) / steps;
  const double n2 = double(n) * n;
  auto rhs = [&](double t, double w) {
    const double sg = sigma(std::exp(t));
    return sg * n2 - w * w / sg;
  };
  double w = sigma(rho0) * std::abs(n), t = ta;
  for (int i = 0; i < steps; ++i) {
    const double k1 = rhs(t, w), k2 = rhs(t + h / 2, w + h / 2 * k1), k3 = rhs(t + h / 2, w + h / 2 * k2),
                 k4 = rhs(t + h, w + h * k3);
    w += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return w / r;
}

//! ND eigenvalue (inverse of the DN eigenvalue) for n != 0.
inline double disc_nd_eigenvalue(const Radial &sigma, int n, double r) { return 1.0 / disc_dn_eigenvalue(sigma, n, r); }

//! The four annulus blocks of mode n in the orthonormal bases of the two
//! circles: B[i][j] = sigma(r_i) v_j'(r_i) sqrt(r_i / r_j), v_j = 1 on r_j
//! and 0 on the other circle, derivative in rho.
struct AnnulusMode {
  double B[2][2];
};

inline AnnulusMode annulus_mode(const Radial &sigma, int n, double r1, double r2) {
  // fundamental solutions started at r1
  const State a = rk4_modes(sigma, n, r1, r2, {1.0, 0.0});
  const State b = rk4_modes(sigma, n, r1, r2, {0.0, 1.0});
  // solution with f(r1) = alpha, y2(r1) = beta: f(r2) = alpha a.y1 + beta b.y1
  AnnulusMode m{};
  const double r[2] = {r1, r2};
  for (int j = 0; j < 2; ++j) {
    // boundary values: f(r_j) = 1, f(r_other) = 0
    double alpha, beta;
    if (j == 0) {
      alpha = 1.0;
      beta = -a.y1 / b.y1; // f(r2) = a.y1 + beta b.y1 = 0
    } else {
      alpha = 0.0;
      beta = 1.0 / b.y1; // f(r2) = beta b.y1 = 1
    }
    const double y2_r1 = beta, y2_r2 = alpha * a.y2 + beta * b.y2;
    // sigma f'(r) = y2 / r
    m.B[0][j] = y2_r1 / r1 * std::sqrt(r1 / r[j]);
    m.B[1][j] = y2_r2 / r2 * std::sqrt(r2 / r[j]);
  }
  return m;
}

} // namespace oracle

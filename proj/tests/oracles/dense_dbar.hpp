#pragma once
// Dense solve of the discretized D-bar equation
//     mu_j - sum_{l != j} h^2 / (pi (k_j - k_l)) T_l conj(mu_l) = 1,
//     T_l = t_l e^{-2i Re(k_l x)} / (4 pi conj(k_l)),
// as a 2n x 2n real system in (Re mu, Im mu).  Only for tiny grids.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct DenseDbar {
  std::vector<std::complex<double>> mu;
  std::complex<double> mu0;
};

inline DenseDbar dense_dbar(const std::vector<std::complex<double>> &k, const std::vector<std::complex<double>> &t,
                            double h, std::complex<double> x) {
  using cplx = std::complex<double>;
  const double pi = 3.14159265358979323846;
  const int n = int(k.size());
  std::vector<cplx> T(n);
  for (int l = 0; l < n; ++l)
    T[l] = t[l] == cplx{} ? cplx{} : t[l] * std::exp(cplx(0, -2.0 * (k[l] * x).real())) / (4.0 * pi * std::conj(k[l]));
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * n);
  for (int j = 0; j < n; ++j) {
    b(j) = 1.0;
    for (int l = 0; l < n; ++l) {
      if (l == j)
        continue;
      // c conj(mu_l) with c = K T_l: Re = cr ur + ci ui, Im = ci ur - cr ui
      const cplx c = h * h / (pi * (k[j] - k[l])) * T[l];
      A(j, l) -= c.real();
      A(j, n + l) -= c.imag();
      A(n + j, l) -= c.imag();
      A(n + j, n + l) -= -c.real();
    }
  }
  const Eigen::VectorXd u = A.fullPivLu().solve(b);
  DenseDbar out;
  out.mu.resize(n);
  for (int j = 0; j < n; ++j)
    out.mu[j] = {u(j), u(n + j)};
  out.mu0 = 1.0;
  for (int l = 0; l < n; ++l)
    out.mu0 += -h * h / (pi * k[l]) * T[l] * std::conj(out.mu[l]);
  return out;
}

} // namespace oracle

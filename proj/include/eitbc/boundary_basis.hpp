#pragma once
// Trigonometric basis on circles and the matrix conventions for boundary
// operators.
//
// On a circle of radius r the orthonormal basis is
//     phi_n(theta) = exp(i n theta) / sqrt(2 pi r),   n = -N..N,
// with respect to arc length ds = r dtheta.  Every vector and matrix in the
// library orders modes as n = -N, ..., -1, (0), 1, ..., N.  Neumann-to-Dirichlet
// matrices act on mean-zero data and skip n = 0 (2N x 2N); Dirichlet-to-Neumann
// matrices carry the full (2N+1) x (2N+1) index set.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eitbc/error.hpp"

namespace eitbc {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

//! Position of mode n in a vector of half order N.
constexpr int mode_index(int n, int N, bool mean_zero) {
  if (!mean_zero)
    return n + N;
  return n < 0 ? n + N : n + N - 1;
}

//! Mode number stored at position idx.
constexpr int index_mode(int idx, int N, bool mean_zero) {
  if (!mean_zero)
    return idx - N;
  return idx < N ? idx - N : idx - N + 1;
}

constexpr int basis_size(int N, bool mean_zero) { return mean_zero ? 2 * N : 2 * N + 1; }

//! Coefficients of a boundary function in the truncated orthonormal basis.
struct FourierVector {
  double radius = 1.0;
  int half_order = 0;
  bool mean_zero = false;
  CVector coeffs;

  FourierVector() = default;
  FourierVector(double r, int N, bool zero_mean = false)
      : radius(r), half_order(N), mean_zero(zero_mean),
        coeffs(CVector::Zero(basis_size(N, zero_mean))) {}

  int size() const { return static_cast<int>(coeffs.size()); }
  bool has_mode(int n) const {
    return std::abs(n) <= half_order && !(mean_zero && n == 0);
  }
  cplx mode(int n) const { return has_mode(n) ? coeffs(mode_index(n, half_order, mean_zero)) : cplx{}; }
  cplx &mode_ref(int n) {
    if (!has_mode(n))
      throw InvalidArgument("FourierVector: mode " + std::to_string(n) + " not in basis");
    return coeffs(mode_index(n, half_order, mean_zero));
  }

  //! Largest |c(-n) - conj(c(n))|; zero for vectors of real-valued functions.
  double reality_defect() const {
    double d = 0.0;
    for (int n = 0; n <= half_order; ++n)
      if (has_mode(n))
        d = std::max(d, std::abs(mode(-n) - std::conj(mode(n))));
    return d;
  }
};

enum class OperatorKind { ND, DN, DNBlock };

inline std::string to_string(OperatorKind k) {
  switch (k) {
  case OperatorKind::ND: return "ND";
  case OperatorKind::DN: return "DN";
  case OperatorKind::DNBlock: return "DN_block";
  }
  return "?";
}

inline OperatorKind operator_kind_from_string(const std::string &s) {
  if (s == "ND") return OperatorKind::ND;
  if (s == "DN") return OperatorKind::DN;
  if (s == "DN_block") return OperatorKind::DNBlock;
  throw InvalidArgument("unknown operator kind '" + s + "'");
}

//! Dense matrix of a boundary operator.  Entry (l, n) is <A phi_n, phi_l>:
//! row index l lives on the output circle, column index n on the input circle.
struct BoundaryOperatorMatrix {
  OperatorKind kind = OperatorKind::DN;
  double in_radius = 1.0;
  double out_radius = 1.0;
  int half_order = 0;
  CMatrix entries;

  BoundaryOperatorMatrix() = default;
  BoundaryOperatorMatrix(OperatorKind k, double r_in, double r_out, int N)
      : kind(k), in_radius(r_in), out_radius(r_out), half_order(N) {
    const int s = basis_size(N, mean_zero());
    entries = CMatrix::Zero(s, s);
  }

  bool mean_zero() const { return kind == OperatorKind::ND; }
  int size() const { return static_cast<int>(entries.rows()); }
  cplx operator()(int l, int n) const {
    return entries(mode_index(l, half_order, mean_zero()), mode_index(n, half_order, mean_zero()));
  }
  cplx &operator()(int l, int n) {
    return entries(mode_index(l, half_order, mean_zero()), mode_index(n, half_order, mean_zero()));
  }

  //! max |A(-l,-n) - conj(A(l,n))| relative to max |A|.
  double conjugate_symmetry_defect() const {
    const int N = half_order;
    double d = 0.0, scale = 0.0;
    for (int l = -N; l <= N; ++l)
      for (int n = -N; n <= N; ++n) {
        if (mean_zero() && (l == 0 || n == 0))
          continue;
        d = std::max(d, std::abs((*this)(-l, -n) - std::conj((*this)(l, n))));
        scale = std::max(scale, std::abs((*this)(l, n)));
      }
    return scale > 0 ? d / scale : d;
  }
};

// ---------------------------------------------------------------------------
// Norms and conditioning

namespace detail {
inline CVector start_vector(Eigen::Index n) {
  CVector v(n);
  for (Eigen::Index j = 0; j < n; ++j)
    v(j) = cplx(1.0 + 0.37 * std::sin(1.3 * double(j) + 0.1), 0.29 * std::cos(0.7 * double(j)));
  return v.normalized();
}
} // namespace detail

//! Largest singular value via power iteration on A^H A (tolerance 1e-10,
//! at most 10000 iterations).
inline double spectral_norm(const CMatrix &A, double tol = 1e-10, int max_iter = 10000) {
  if (A.size() == 0)
    return 0.0;
  if (A.cwiseAbs().maxCoeff() == 0.0)
    return 0.0;
  CVector v = detail::start_vector(A.cols());
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    CVector w = A.adjoint() * (A * v);
    const double next = w.norm();
    if (next == 0.0)
      return 0.0;
    v = w / next;
    if (std::abs(next - lambda) <= tol * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(lambda);
}

//! Ratio of extreme singular values: power iteration for the largest,
//! inverse iteration through an LU factorization for the smallest.
inline double condition_estimate(const CMatrix &A, double tol = 1e-10, int max_iter = 10000) {
  if (A.rows() != A.cols())
    throw InvalidArgument("condition_estimate: matrix must be square");
  const double smax = spectral_norm(A, tol, max_iter);
  Eigen::PartialPivLU<CMatrix> lu(A);
  if (!(lu.rcond() > 1e-300))
    return std::numeric_limits<double>::infinity();
  CVector v = detail::start_vector(A.cols());
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    // w = (A^H A)^{-1} v = A^{-1} A^{-H} v
    CVector y = lu.adjoint().solve(v);
    CVector w = lu.solve(y);
    const double next = w.norm();
    if (!std::isfinite(next))
      return std::numeric_limits<double>::infinity();
    v = w / next;
    if (std::abs(next - lambda) <= tol * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  const double smin = 1.0 / std::sqrt(lambda);
  return smax / smin;
}

//! ||A - B||_2 / ||B||_2 in the spectral norm.
inline double relative_error(const CMatrix &A, const CMatrix &B) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw InvalidArgument("relative_error: shape mismatch");
  const double nb = spectral_norm(B);
  if (nb == 0.0)
    throw InvalidArgument("relative_error: reference matrix is zero");
  return spectral_norm(A - B) / nb;
}

inline double relative_error(const BoundaryOperatorMatrix &A, const BoundaryOperatorMatrix &B) {
  return relative_error(A.entries, B.entries);
}

// ---------------------------------------------------------------------------
// Analysis and synthesis

//! Coefficients from Q equally spaced samples f(2 pi q / Q) by the periodic
//! trapezoid rule.  Exact for trigonometric polynomials of degree <= N.
inline FourierVector project(std::span<const cplx> samples, double radius, int N) {
  const auto Q = static_cast<int>(samples.size());
  if (Q < 4 * N + 2)
    throw InvalidArgument("project: " + std::to_string(Q) + " samples alias modes up to N=" +
                          std::to_string(N) + " (need at least 4N+2)");
  if (radius <= 0.0)
    throw InvalidArgument("project: radius must be positive");
  FourierVector v(radius, N);
  const double scale = std::sqrt(radius / (2.0 * pi)) * (2.0 * pi / Q);
  for (int n = -N; n <= N; ++n) {
    cplx acc{};
    for (int q = 0; q < Q; ++q)
      acc += samples[q] * std::polar(1.0, -2.0 * pi * double(n) * q / Q);
    v.mode_ref(n) = scale * acc;
  }
  return v;
}

inline FourierVector project(std::span<const double> samples, double radius, int N) {
  std::vector<cplx> c(samples.begin(), samples.end());
  return project(std::span<const cplx>(c), radius, N);
}

//! Coefficients of a function given in closed form, sampled at Q points.
inline FourierVector project(const std::function<cplx(double)> &f, double radius, int N, int Q = 0) {
  if (Q == 0)
    Q = std::max(4 * N + 2, 1024);
  std::vector<cplx> s(Q);
  for (int q = 0; q < Q; ++q)
    s[q] = f(2.0 * pi * q / Q);
  return project(std::span<const cplx>(s), radius, N);
}

//! Evaluates sum_n c_n phi_n(theta) at each theta.
inline std::vector<cplx> synthesize(const FourierVector &v, std::span<const double> thetas) {
  std::vector<cplx> out(thetas.size());
  const double norm = 1.0 / std::sqrt(2.0 * pi * v.radius);
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    cplx acc{};
    for (int n = -v.half_order; n <= v.half_order; ++n)
      if (v.has_mode(n))
        acc += v.mode(n) * std::polar(1.0, double(n) * thetas[j]);
    out[j] = norm * acc;
  }
  return out;
}

inline cplx synthesize_at(const FourierVector &v, double theta) {
  const double t[1] = {theta};
  return synthesize(v, t)[0];
}

// ---------------------------------------------------------------------------
// Unit-conductivity operators

//! DN map of sigma = 1 on the disc of radius r: diagonal |n| / r.
inline BoundaryOperatorMatrix dn_unit(double r, int N) {
  if (r <= 0.0)
    throw InvalidArgument("dn_unit: radius must be positive");
  BoundaryOperatorMatrix L(OperatorKind::DN, r, r, N);
  for (int n = -N; n <= N; ++n)
    L(n, n) = std::abs(n) / r;
  return L;
}

//! ND map of sigma = 1 on the disc of radius r: diagonal r / |n|, n != 0.
inline BoundaryOperatorMatrix nd_unit(double r, int N) {
  if (r <= 0.0)
    throw InvalidArgument("nd_unit: radius must be positive");
  BoundaryOperatorMatrix R(OperatorKind::ND, r, r, N);
  for (int n = -N; n <= N; ++n)
    if (n != 0)
      R(n, n) = r / std::abs(n);
  return R;
}

// ---------------------------------------------------------------------------
// Noise and ND -> DN conversion

//! R + c E with E complex Gaussian, E(l,n) ~ N(0,1/2) + i N(0,1/2) for the
//! columns n > 0 and E(-l,-n) = conj(E(l,n)) for the rest, so the perturbed
//! matrix still maps real functions to real functions.
inline BoundaryOperatorMatrix add_noise(const BoundaryOperatorMatrix &R, double c, std::uint64_t seed) {
  if (c < 0.0)
    throw InvalidArgument("add_noise: amplitude must be non-negative");
  if (R.kind != OperatorKind::ND)
    throw InvalidArgument("add_noise: expects an ND matrix");
  BoundaryOperatorMatrix out = R;
  if (c == 0.0)
    return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  const int N = R.half_order;
  for (int n = 1; n <= N; ++n)
    for (int l = -N; l <= N; ++l) {
      if (l == 0)
        continue;
      const double re = gauss(rng);
      const double im = gauss(rng);
      const cplx e(re, im);
      out(l, n) += c * e;
      out(-l, -n) += c * std::conj(e);
    }
  return out;
}

//! Restriction of an ND (or DN) matrix to modes |n| <= N.
inline BoundaryOperatorMatrix truncate_modes(const BoundaryOperatorMatrix &A, int N) {
  if (N > A.half_order)
    throw InvalidArgument("truncate_modes: requested order exceeds matrix order");
  BoundaryOperatorMatrix out(A.kind, A.in_radius, A.out_radius, N);
  for (int l = -N; l <= N; ++l)
    for (int n = -N; n <= N; ++n) {
      if (A.mean_zero() && (l == 0 || n == 0))
        continue;
      out(l, n) = A(l, n);
    }
  return out;
}

//! Inverts a 2N x 2N ND matrix and embeds the inverse with a zero n = 0
//! row and column, so that L 1 = 0 and the range of L is mean-zero.
inline BoundaryOperatorMatrix nd_to_dn(const BoundaryOperatorMatrix &R) {
  if (R.kind != OperatorKind::ND)
    throw InvalidArgument("nd_to_dn: expects an ND matrix");
  Eigen::PartialPivLU<CMatrix> lu(R.entries);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14))
    throw SingularMatrixError("nd_to_dn: ND matrix is singular", rcond > 0 ? 1.0 / rcond : INFINITY);
  const CMatrix inv = lu.inverse();
  const int N = R.half_order;
  BoundaryOperatorMatrix L(OperatorKind::DN, R.in_radius, R.out_radius, N);
  for (int l = -N; l <= N; ++l)
    for (int n = -N; n <= N; ++n)
      if (l != 0 && n != 0)
        L(l, n) = inv(mode_index(l, N, true), mode_index(n, N, true));
  return L;
}

//! Sets the n = 0 row and column to zero.
inline void impose_zero_block(BoundaryOperatorMatrix &L) {
  const int c = mode_index(0, L.half_order, false);
  L.entries.row(c).setZero();
  L.entries.col(c).setZero();
}

} // namespace eitbc

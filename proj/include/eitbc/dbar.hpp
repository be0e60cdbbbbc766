#pragma once
// Regularized D-bar reconstruction on the disc of radius r2:
//  * CGO traces psi = [I + S_k (L_gamma - L_1)]^{-1} exp_trace_coeffs(k),
//  * t(k) = int e^{i conj(k) conj(x)} (L_gamma - L_1) psi ds,
//  * mu(x, k) = 1 + (1/pi) int T_x(k') / (k - k') conj(mu(x, k')) dk',
//    T_x(k') = t(k') e^{-2i Re(k' x)} / (4 pi conj(k')), on |k'| < R,
//    the exponent sign making the reconstruction translation covariant
//    (shifting gamma by x0 multiplies t by e^{2i Re(k x0)}),
//  * gamma(x) = Re mu(x, 0)^2.
//
// The k-plane is sampled on a cell-centred grid (no sample at k = 0).  The
// convolution with 1/(pi k) is periodized on a grid padded to twice the size
// and applied by FFT; the kernel sample at the origin is zero.  The equation
// is real-linear in mu, so it is solved by restarted GMRES with the real inner
// product Re <u, v>.  mu(x, 0) is evaluated by the same quadrature (Nystrom)
// from the grid solution.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <fftw3.h>

#include "eitbc/boundary_basis.hpp"
#include "eitbc/conductivity.hpp"
#include "eitbc/error.hpp"
#include "eitbc/faddeev.hpp"

namespace eitbc {

//! Coefficients of e^{ikx} restricted to the circle |x| = r:
//! sqrt(2 pi r) (ikr)^n / n! for n >= 0.
inline FourierVector exp_trace_coeffs(cplx k, double r, int N) {
  FourierVector g(r, N);
  cplx c = std::sqrt(2.0 * pi * r);
  for (int n = 0; n <= N; ++n) {
    if (n > 0)
      c *= I * k * r / double(n);
    g.mode_ref(n) = c;
  }
  return g;
}

//! Weights w_n with int e^{i conj(k) conj(x)} v ds = sum_n w_n v_n:
//! w_n = sqrt(2 pi r) (i conj(k) r)^n / n! for n >= 0, zero for n < 0.
inline CVector conj_exp_pairing(cplx k, double r, int N) {
  CVector w = CVector::Zero(2 * N + 1);
  cplx c = std::sqrt(2.0 * pi * r);
  for (int n = 0; n <= N; ++n) {
    if (n > 0)
      c *= I * std::conj(k) * r / double(n);
    w(n + N) = c;
  }
  return w;
}

struct CgoTrace {
  cplx k;
  FourierVector psi_hat;
  double residual = 0.0;
};

namespace detail {
inline void check_dbar_operands(const BoundaryOperatorMatrix &Lg, const BoundaryOperatorMatrix &L1) {
  if (Lg.half_order != L1.half_order || Lg.size() != L1.size() || Lg.size() != 2 * Lg.half_order + 1)
    throw InvalidArgument("dbar: DN matrices must share the full (2N+1)-mode basis");
  if (std::abs(Lg.out_radius - L1.out_radius) > 1e-12)
    throw InvalidArgument("dbar: DN matrices live on different circles");
}
} // namespace detail

inline CgoTrace solve_bie(const BoundaryOperatorMatrix &Lg, const BoundaryOperatorMatrix &L1,
                          const SingleLayerMatrix &S, cplx k) {
  detail::check_dbar_operands(Lg, L1);
  const int N = Lg.half_order;
  if (S.half_order != N || std::abs(S.radius - Lg.out_radius) > 1e-12)
    throw InvalidArgument("solve_bie: single-layer matrix does not match the DN basis");
  const double r = Lg.out_radius;
  const CMatrix A = CMatrix::Identity(2 * N + 1, 2 * N + 1) + S.entries * (Lg.entries - L1.entries);
  const FourierVector g = exp_trace_coeffs(k, r, N);
  Eigen::PartialPivLU<CMatrix> lu(A);
  const double rc = lu.rcond();
  if (!(rc > 1e-14))
    throw SingularMatrixError("solve_bie: boundary integral system is singular", rc > 0 ? 1.0 / rc : INFINITY);
  CgoTrace out{k, FourierVector(r, N), 0.0};
  out.psi_hat.coeffs = lu.solve(g.coeffs);
  out.residual = (A * out.psi_hat.coeffs - g.coeffs).norm() / g.coeffs.norm();
  return out;
}

inline cplx scattering_transform(const BoundaryOperatorMatrix &Lg, const BoundaryOperatorMatrix &L1,
                                 const CgoTrace &trace, cplx k) {
  detail::check_dbar_operands(Lg, L1);
  const int N = Lg.half_order;
  const CVector v = (Lg.entries - L1.entries) * trace.psi_hat.coeffs;
  return conj_exp_pairing(k, Lg.out_radius, N).transpose() * v;
}

//! t(k) in one call (series single-layer matrix).
inline cplx scattering_at(const BoundaryOperatorMatrix &Lg, const BoundaryOperatorMatrix &L1, cplx k) {
  const auto S = single_layer_matrix(k, Lg.out_radius, Lg.half_order);
  return scattering_transform(Lg, L1, solve_bie(Lg, L1, S, k), k);
}

//! Truncated scattering transform on a cell-centred m x m grid of spacing h,
//! k(i, j) = ((i - m/2 + 1/2) + i (j - m/2 + 1/2)) h.  Storage index j m + i.
struct ScatteringGrid {
  double R = 0.0;
  double h = 0.0;
  int m = 0;
  double clip = 15.0;
  std::vector<cplx> t;
  std::vector<std::uint8_t> clip_mask; // |t| > clip
  std::vector<std::uint8_t> failed;    // per-k solve failure (t set to 0)

  cplx k_at(int i, int j) const { return {(i - m / 2 + 0.5) * h, (j - m / 2 + 0.5) * h}; }
  std::size_t index(int i, int j) const { return std::size_t(j) * m + i; }
  bool all_zero() const {
    return std::all_of(t.begin(), t.end(), [](cplx v) { return v == cplx{}; });
  }
  double max_abs() const {
    double a = 0.0;
    for (cplx v : t)
      a = std::max(a, std::abs(v));
    return a;
  }
};

inline ScatteringGrid make_empty_grid(double R, int m) {
  if (!(R > 0.0) || m < 2 || m % 2)
    throw InvalidArgument("scattering grid: need R > 0 and an even cell count m >= 2");
  ScatteringGrid G;
  G.R = R;
  G.m = m;
  G.h = 2.0 * R / m;
  G.t.assign(std::size_t(m) * m, cplx{});
  G.clip_mask.assign(G.t.size(), 0);
  G.failed.assign(G.t.size(), 0);
  return G;
}

inline void refresh_clip_mask(ScatteringGrid &G) {
  for (std::size_t q = 0; q < G.t.size(); ++q)
    G.clip_mask[q] = std::abs(G.t[q]) > G.clip ? 1 : 0;
}

inline ScatteringGrid build_scattering_grid(const BoundaryOperatorMatrix &Lg, const BoundaryOperatorMatrix &L1,
                                            double R, int m) {
  detail::check_dbar_operands(Lg, L1);
  ScatteringGrid G = make_empty_grid(R, m);
  const double r = Lg.out_radius;
  const int N = Lg.half_order;
  const CMatrix D = Lg.entries - L1.entries;
  const CMatrix Id = CMatrix::Identity(2 * N + 1, 2 * N + 1);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const cplx k = G.k_at(i, j);
      if (std::abs(k) >= R)
        continue;
      const std::size_t q = G.index(i, j);
      try {
        const auto S = single_layer_matrix(k, r, N);
        const CMatrix A = Id + S.entries * D;
        Eigen::PartialPivLU<CMatrix> lu(A);
        const CVector psi = lu.solve(exp_trace_coeffs(k, r, N).coeffs);
        const cplx tk = conj_exp_pairing(k, r, N).transpose() * (D * psi);
        if (!std::isfinite(tk.real()) || !std::isfinite(tk.imag()) || !(lu.rcond() > 1e-14))
          G.failed[q] = 1;
        else
          G.t[q] = tk;
      } catch (const Error &) {
        G.failed[q] = 1;
      }
    }
  refresh_clip_mask(G);
  return G;
}

//! Restriction of a grid to |k| < R: same spacing, cropped to the smallest
//! centred square holding the disc, values zeroed outside it.
inline ScatteringGrid truncate_grid(const ScatteringGrid &G, double R) {
  if (!(R > 0.0))
    throw InvalidArgument("truncate_grid: R must be positive");
  if (R > G.R * (1 + 1e-12))
    throw InvalidArgument("truncate_grid: R exceeds the grid radius");
  int half = int(std::ceil(R / G.h - 1e-9));
  half = std::min(half, G.m / 2);
  ScatteringGrid T;
  T.R = R;
  T.h = G.h;
  T.m = 2 * half;
  T.clip = G.clip;
  T.t.assign(std::size_t(T.m) * T.m, cplx{});
  T.clip_mask.assign(T.t.size(), 0);
  T.failed.assign(T.t.size(), 0);
  const int off = G.m / 2 - half;
  for (int j = 0; j < T.m; ++j)
    for (int i = 0; i < T.m; ++i) {
      const std::size_t src = G.index(i + off, j + off), dst = T.index(i, j);
      if (std::abs(T.k_at(i, j)) < R) {
        T.t[dst] = G.t[src];
        T.failed[dst] = G.failed[src];
      }
    }
  refresh_clip_mask(T);
  return T;
}

struct DbarOptions {
  double tol = 1e-6;
  int max_iter = 200;
  int restart = 40;
  bool warm_start = true;
  //! Keep the last iterate at points where GMRES stalls instead of throwing;
  //! such points are counted in ReconstructionGrid::nonconverged.
  bool keep_nonconverged = false;
};

struct DbarStats {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> history;
  bool converged = true;
};

namespace detail {

struct FftwBuffer {
  fftw_complex *p = nullptr;
  explicit FftwBuffer(std::size_t n) : p(fftw_alloc_complex(n)) {
    if (!p)
      throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(p); }
  FftwBuffer(const FftwBuffer &) = delete;
  FftwBuffer &operator=(const FftwBuffer &) = delete;
  cplx *data() { return reinterpret_cast<cplx *>(p); }
};

struct FftwPlan {
  fftw_plan p = nullptr;
  FftwPlan(int n, fftw_complex *in, fftw_complex *out, int sign)
      : p(fftw_plan_dft_2d(n, n, in, out, sign, FFTW_ESTIMATE)) {}
  ~FftwPlan() {
    if (p)
      fftw_destroy_plan(p);
  }
  FftwPlan(const FftwPlan &) = delete;
  FftwPlan &operator=(const FftwPlan &) = delete;
  void run() const { fftw_execute(p); }
};

} // namespace detail

//! Solver of the D-bar integral equation on one scattering grid.
class DbarSolver {
public:
  explicit DbarSolver(const ScatteringGrid &G, DbarOptions opt = {})
      : G_(G), opt_(opt), m_(G.m), P_(2 * G.m), buf_(std::size_t(P_) * P_), khat_(std::size_t(P_) * P_),
        fwd_(P_, buf_.p, buf_.p, FFTW_FORWARD), bwd_(P_, buf_.p, buf_.p, FFTW_BACKWARD) {
    const double h = G.h;
    cplx *b = buf_.data();
    for (int dj = 0; dj < P_; ++dj)
      for (int di = 0; di < P_; ++di) {
        const int a = di < P_ / 2 ? di : di - P_;
        const int c = dj < P_ / 2 ? dj : dj - P_;
        b[std::size_t(dj) * P_ + di] = (a == 0 && c == 0) ? cplx{} : h / (pi * cplx(a, c));
      }
    fwd_.run();
    const double scale = 1.0 / (double(P_) * P_);
    for (std::size_t q = 0; q < khat_.size(); ++q)
      khat_[q] = b[q] * scale;
    // support of t and the per-cell factor t / (4 pi conj k)
    for (int j = 0; j < m_; ++j)
      for (int i = 0; i < m_; ++i) {
        const std::size_t q = G.index(i, j);
        if (G.t[q] != cplx{})
          support_.push_back(q);
      }
    tk_.assign(G.t.size(), cplx{});
    for (std::size_t q : support_) {
      const int i = int(q % m_), j = int(q / m_);
      tk_[q] = G.t[q] / (4.0 * pi * std::conj(G.k_at(i, j)));
    }
    mu_.assign(G.t.size(), cplx(1.0, 0.0));
  }

  const ScatteringGrid &grid() const { return G_; }
  int padded_size() const { return P_; }

  //! T_x on the grid.
  std::vector<cplx> weights(cplx x) const {
    std::vector<cplx> T(G_.t.size(), cplx{});
    for (std::size_t q : support_) {
      const cplx k = G_.k_at(int(q % m_), int(q / m_));
      T[q] = tk_[q] * std::polar(1.0, -2.0 * (k * x).real());
    }
    return T;
  }

  //! y = mu - conv(K, T conj mu) on the grid.
  void apply(const std::vector<cplx> &T, const std::vector<cplx> &mu, std::vector<cplx> &y) {
    cplx *b = buf_.data();
    std::fill(b, b + std::size_t(P_) * P_, cplx{});
    for (std::size_t q : support_)
      b[std::size_t(q / m_) * P_ + q % m_] = T[q] * std::conj(mu[q]);
    fwd_.run();
    for (std::size_t q = 0; q < khat_.size(); ++q)
      b[q] *= khat_[q];
    bwd_.run();
    y.resize(mu.size());
    for (int j = 0; j < m_; ++j)
      for (int i = 0; i < m_; ++i) {
        const std::size_t q = std::size_t(j) * m_ + i;
        y[q] = mu[q] - b[std::size_t(j) * P_ + i];
      }
  }

  //! Solves for mu(x, .) on the grid, starting from `mu` (updated in place).
  DbarStats solve_grid(const std::vector<cplx> &T, std::vector<cplx> &mu) {
    const std::size_t n = mu.size();
    DbarStats st;
    const double bnorm = std::sqrt(double(n)); // right-hand side is all ones
    auto rdot = [](const std::vector<cplx> &u, const std::vector<cplx> &v) {
      double s = 0.0;
      for (std::size_t q = 0; q < u.size(); ++q)
        s += u[q].real() * v[q].real() + u[q].imag() * v[q].imag();
      return s;
    };
    std::vector<cplx> r(n), Ax(n), w(n);
    const int mr = std::max(1, opt_.restart);
    std::vector<std::vector<cplx>> V(mr + 1, std::vector<cplx>(n));
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(mr + 1, mr);
    std::vector<double> cs(mr), sn(mr), e(mr + 1);
    while (true) {
      apply(T, mu, Ax);
      for (std::size_t q = 0; q < n; ++q)
        r[q] = cplx(1.0, 0.0) - Ax[q];
      double beta = std::sqrt(rdot(r, r));
      st.relative_residual = beta / bnorm;
      if (st.history.empty())
        st.history.push_back(st.relative_residual);
      if (st.relative_residual <= opt_.tol)
        return st;
      if (st.iterations >= opt_.max_iter)
        throw ConvergenceError("DbarSolver: GMRES did not reach tolerance", st.history);
      for (std::size_t q = 0; q < n; ++q)
        V[0][q] = r[q] / beta;
      std::fill(e.begin(), e.end(), 0.0);
      e[0] = beta;
      H.setZero();
      int k = 0;
      for (; k < mr && st.iterations < opt_.max_iter; ++k) {
        apply(T, V[k], w);
        for (int i = 0; i <= k; ++i) {
          H(i, k) = rdot(V[i], w);
          for (std::size_t q = 0; q < n; ++q)
            w[q] -= H(i, k) * V[i][q];
        }
        H(k + 1, k) = std::sqrt(rdot(w, w));
        if (H(k + 1, k) > 0.0)
          for (std::size_t q = 0; q < n; ++q)
            V[k + 1][q] = w[q] / H(k + 1, k);
        for (int i = 0; i < k; ++i) {
          const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
          H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
          H(i, k) = t;
        }
        const double den = std::hypot(H(k, k), H(k + 1, k));
        cs[k] = H(k, k) / den;
        sn[k] = H(k + 1, k) / den;
        H(k, k) = den;
        H(k + 1, k) = 0.0;
        e[k + 1] = -sn[k] * e[k];
        e[k] = cs[k] * e[k];
        ++st.iterations;
        st.history.push_back(std::abs(e[k + 1]) / bnorm);
        if (std::abs(e[k + 1]) / bnorm <= opt_.tol || den == 0.0) {
          ++k;
          break;
        }
      }
      // back substitution and update
      std::vector<double> y(k);
      for (int i = k - 1; i >= 0; --i) {
        double s = e[i];
        for (int j = i + 1; j < k; ++j)
          s -= H(i, j) * y[j];
        y[i] = s / H(i, i);
      }
      for (int i = 0; i < k; ++i)
        for (std::size_t q = 0; q < n; ++q)
          mu[q] += y[i] * V[i][q];
    }
  }

  //! mu(x, 0).
  cplx mu0(cplx x, DbarStats *stats = nullptr) {
    if (support_.empty()) {
      if (stats)
        *stats = DbarStats{0, 0.0, {0.0}};
      return 1.0;
    }
    const auto T = weights(x);
    if (!opt_.warm_start)
      std::fill(mu_.begin(), mu_.end(), cplx(1.0, 0.0));
    DbarStats st;
    try {
      st = solve_grid(T, mu_);
    } catch (const ConvergenceError &e) {
      if (!opt_.keep_nonconverged)
        throw;
      st.converged = false;
      st.iterations = opt_.max_iter;
      st.history = e.residual_history();
      st.relative_residual = st.history.empty() ? 0.0 : st.history.back();
    }
    if (stats)
      *stats = st;
    const cplx out = evaluate_at_origin(T, mu_);
    if (!st.converged) // do not warm start the next point from a stalled iterate
      std::fill(mu_.begin(), mu_.end(), cplx(1.0, 0.0));
    return out;
  }

  //! 1 + sum_l K(0 - k_l) T_l conj(mu_l).
  cplx evaluate_at_origin(const std::vector<cplx> &T, const std::vector<cplx> &mu) const {
    cplx s{};
    for (std::size_t q : support_) {
      const cplx k = G_.k_at(int(q % m_), int(q / m_));
      s += -(G_.h * G_.h) / (pi * k) * T[q] * std::conj(mu[q]);
    }
    return 1.0 + s;
  }

private:
  const ScatteringGrid &G_;
  DbarOptions opt_;
  int m_, P_;
  detail::FftwBuffer buf_;
  std::vector<cplx> khat_;
  detail::FftwPlan fwd_, bwd_;
  std::vector<std::size_t> support_;
  std::vector<cplx> tk_;
  std::vector<cplx> mu_;
};

//! Conductivity samples on an n x n cell-centred raster of [-rad, rad]^2,
//! kept inside the disc of radius rad.
struct ReconstructionGrid {
  int n = 0;
  double radius = 1.0;
  std::vector<std::uint8_t> inside;
  std::vector<cplx> mu0;
  std::vector<double> gamma_rec; // 1 outside the disc
  std::vector<double> truth;     // empty without ground truth
  double imag_residual_l2 = 0.0; // L2 norm of Im mu0^2 over the disc
  std::optional<double> l2_error_pct;
  int total_iterations = 0;
  int nonconverged = 0;

  double x_at(int i) const { return -radius + (i + 0.5) * 2.0 * radius / n; }
  std::size_t index(int i, int j) const { return std::size_t(j) * n + i; }
};

inline ReconstructionGrid make_raster(int n, double radius = 1.0) {
  if (n < 2)
    throw InvalidArgument("raster size must be at least 2");
  ReconstructionGrid R;
  R.n = n;
  R.radius = radius;
  R.inside.assign(std::size_t(n) * n, 0);
  R.mu0.assign(R.inside.size(), cplx(1.0, 0.0));
  R.gamma_rec.assign(R.inside.size(), 1.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      R.inside[R.index(i, j)] = std::hypot(R.x_at(i), R.x_at(j)) < radius ? 1 : 0;
  return R;
}

//! 100 ||a - b|| / ||b|| over the disc cells of the raster.
inline double raster_l2_error_pct(const ReconstructionGrid &R, const std::vector<double> &a,
                                  const std::vector<double> &b) {
  double num = 0.0, den = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q)
    if (R.inside[q]) {
      num += (a[q] - b[q]) * (a[q] - b[q]);
      den += b[q] * b[q];
    }
  if (den == 0.0)
    throw InvalidArgument("raster_l2_error_pct: reference vanishes");
  return 100.0 * std::sqrt(num / den);
}

inline ReconstructionGrid reconstruct(const ScatteringGrid &G, int raster,
                                      const std::optional<ConductivityField> &truth = {},
                                      const DbarOptions &opt = {}, double radius = 1.0) {
  ReconstructionGrid R = make_raster(raster, radius);
  DbarSolver solver(G, opt);
  double im2 = 0.0;
  const double cell = 2.0 * radius / raster;
  for (int j = 0; j < raster; ++j)
    for (int ii = 0; ii < raster; ++ii) {
      // serpentine order keeps warm starts between neighbouring points
      const int i = (j % 2 == 0) ? ii : raster - 1 - ii;
      const std::size_t q = R.index(i, j);
      if (!R.inside[q])
        continue;
      DbarStats st;
      const cplx mu = solver.mu0(cplx(R.x_at(i), R.x_at(j)), &st);
      R.total_iterations += st.iterations;
      R.nonconverged += st.converged ? 0 : 1;
      R.mu0[q] = mu;
      const cplx sq = mu * mu;
      R.gamma_rec[q] = sq.real();
      im2 += sq.imag() * sq.imag() * cell * cell;
    }
  R.imag_residual_l2 = std::sqrt(im2);
  if (truth) {
    R.truth.assign(R.gamma_rec.size(), 1.0);
    for (int j = 0; j < raster; ++j)
      for (int i = 0; i < raster; ++i)
        if (R.inside[R.index(i, j)])
          R.truth[R.index(i, j)] = (*truth)(R.x_at(i), R.x_at(j));
    R.l2_error_pct = raster_l2_error_pct(R, R.gamma_rec, R.truth);
  }
  return R;
}

//! Anisotropic total variation sum |grad gamma| h over neighbouring disc cells.
inline double total_variation(const ReconstructionGrid &R) {
  const double h = 2.0 * R.radius / R.n;
  double tv = 0.0;
  for (int j = 0; j < R.n; ++j)
    for (int i = 0; i < R.n; ++i) {
      const std::size_t q = R.index(i, j);
      if (!R.inside[q])
        continue;
      if (i + 1 < R.n && R.inside[R.index(i + 1, j)])
        tv += std::abs(R.gamma_rec[R.index(i + 1, j)] - R.gamma_rec[q]) * h;
      if (j + 1 < R.n && R.inside[R.index(i, j + 1)])
        tv += std::abs(R.gamma_rec[R.index(i, j + 1)] - R.gamma_rec[q]) * h;
    }
  return tv;
}

} // namespace eitbc

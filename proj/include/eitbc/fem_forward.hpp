#pragma once
// Piecewise-linear finite elements for div(sigma grad u) = 0 on discs and
// annuli, and the boundary-operator matrices built from them.
//
// Conventions
//  * sigma is sampled at triangle centroids (one value per element), so a
//    ring placed on a discontinuity radius keeps the jump sharp.
//  * Boundary data enter through exact integrals of trigonometric functions
//    against boundary hat functions on the circle (ds = r dtheta):
//        int exp(i n theta) hat_b ds = r h sinc^2(n h / 2) exp(i n theta_b).
//    The same weights give the Fourier coefficients of a piecewise-linear
//    trace, so the discrete ND matrix is B^H K^{-1} B and Hermitian.
//  * DN entries use the variational flux: the residual K u at boundary
//    nodes paired with the nodal interpolant of conj(phi_l).  Fluxes are
//    taken along the outward radial direction on every circle.
//  * The Neumann problem is made definite by pinning the centre node; the
//    boundary mean is subtracted afterwards.  This reproduces the
//    mean-zero-constrained solution exactly on the boundary modes n != 0.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "eitbc/boundary_basis.hpp"
#include "eitbc/conductivity.hpp"
#include "eitbc/error.hpp"
#include "eitbc/mesh.hpp"

namespace eitbc {

using SparseMatrix = Eigen::SparseMatrix<double>;

//! Stiffness matrix int sigma grad(phi_i) . grad(phi_j) with sigma taken at
//! the centroid of each triangle.
inline SparseMatrix assemble_stiffness(const Mesh &mesh, const ConductivityField &sigma) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.num_triangles());
  for (const auto &t : mesh.triangles) {
    const Point &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
    const double area = mesh.signed_area(t);
    if (!(area > 0.0))
      throw InvalidArgument("assemble_stiffness: degenerate or inverted triangle");
    const Point ctr = mesh.centroid(t);
    const double s = sigma(ctr.x, ctr.y);
    if (!(s > 0.0))
      throw InvalidArgument("assemble_stiffness: conductivity not positive inside the mesh");
    // gradients times 2*area: rotate the opposite edge by 90 degrees
    const double gx[3] = {b.y - c.y, c.y - a.y, a.y - b.y};
    const double gy[3] = {c.x - b.x, a.x - c.x, b.x - a.x};
    const double f = s / (4.0 * area);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(t[i], t[j], f * (gx[i] * gx[j] + gy[i] * gy[j]));
  }
  SparseMatrix K(mesh.num_vertices(), mesh.num_vertices());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

namespace detail {

inline double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

//! r h sinc^2(n h / 2): weight of exp(i n theta) against a boundary hat.
inline double hat_weight(const BoundaryLoop &loop, int n) {
  const double h = 2.0 * pi / loop.size();
  const double s = sinc(0.5 * n * h);
  return loop.radius * h * s * s;
}

inline void check_loop_resolution(const BoundaryLoop &loop, int N, const char *who) {
  if (loop.size() < 8 * N)
    throw InvalidArgument(std::string(who) + ": boundary has " + std::to_string(loop.size()) +
                          " nodes, need at least 8N = " + std::to_string(8 * N));
}

//! Fourier coefficients <u, phi_l> (l = -N..N) of the piecewise-linear trace
//! with nodal values u_b on the loop.
template <class Values>
CVector trace_coefficients(const BoundaryLoop &loop, const Values &u, int N) {
  CVector c(2 * N + 1);
  const double norm = 1.0 / std::sqrt(2.0 * pi * loop.radius);
  for (int l = -N; l <= N; ++l) {
    cplx acc{};
    for (int b = 0; b < loop.size(); ++b)
      acc += u(loop.vertices[b]) * std::polar(1.0, -double(l) * loop.angles[b]);
    c(l + N) = norm * detail::hat_weight(loop, l) * acc;
  }
  return c;
}

} // namespace detail

//! Nodal solution of a finite-element problem.
struct FemSolution {
  const Mesh *mesh = nullptr;
  CVector values;
  enum class Constraint { BoundaryMeanZero, Dirichlet } constraint = Constraint::BoundaryMeanZero;

  //! int u ds over boundary loop `loop` (exact for the piecewise-linear trace).
  cplx boundary_integral(int loop = 0) const {
    const auto &L = mesh->boundary_loops.at(loop);
    const double w = detail::hat_weight(L, 0);
    cplx s{};
    for (int v : L.vertices)
      s += values(v);
    return w * s;
  }
};

//! Factorized pure-Neumann problem on a disc mesh.
class NeumannProblem {
public:
  NeumannProblem(const Mesh &mesh, const ConductivityField &sigma) : mesh_(&mesh) {
    if (mesh.boundary_loops.size() != 1)
      throw InvalidArgument("NeumannProblem: expects a disc mesh with one boundary loop");
    const SparseMatrix K = assemble_stiffness(mesh, sigma);
    // drop the pinned centre node (index 0)
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    reduced_ = K.bottomRightCorner(n - 1, n - 1);
    llt_.compute(reduced_);
    if (llt_.info() != Eigen::Success)
      throw SingularMatrixError("NeumannProblem: stiffness factorization failed", INFINITY);
  }

  const Mesh &mesh() const { return *mesh_; }
  const BoundaryLoop &boundary() const { return mesh_->boundary_loops[0]; }

  //! Solves for each column of `loads` (size num_vertices) and removes the
  //! boundary mean.
  Eigen::MatrixXd solve(const Eigen::MatrixXd &loads) const {
    const auto n = static_cast<Eigen::Index>(mesh_->num_vertices());
    Eigen::MatrixXd x = llt_.solve(loads.bottomRows(n - 1));
    if (llt_.info() != Eigen::Success)
      throw Error("NeumannProblem: solve failed");
    Eigen::MatrixXd u(n, loads.cols());
    u.row(0).setZero();
    u.bottomRows(n - 1) = x;
    const auto &loop = boundary();
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      double mean = 0.0;
      for (int v : loop.vertices)
        mean += u(v, c);
      mean /= loop.size();
      u.col(c).array() -= mean;
    }
    return u;
  }

  //! Loads int g hat_i ds for g = cos(n theta) (trig = 0) or sin(n theta) (trig = 1).
  Eigen::VectorXd trig_load(int n, int trig) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh_->num_vertices());
    const auto &loop = boundary();
    const double w = detail::hat_weight(loop, n);
    for (int i = 0; i < loop.size(); ++i)
      b(loop.vertices[i]) = w * (trig == 0 ? std::cos(n * loop.angles[i]) : std::sin(n * loop.angles[i]));
    return b;
  }

private:
  const Mesh *mesh_;
  SparseMatrix reduced_;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

//! Neumann solution with flux g (a mean-zero FourierVector on the boundary).
inline FemSolution solve_neumann(const NeumannProblem &problem, const FourierVector &g) {
  const auto &loop = problem.boundary();
  double gscale = 0.0;
  for (int n = -g.half_order; n <= g.half_order; ++n)
    gscale = std::max(gscale, std::abs(g.mode(n)));
  if (std::abs(g.mode(0)) > 1e-12 * std::max(1.0, gscale))
    throw InvalidArgument("solve_neumann: flux must have zero mean (Neumann compatibility)");
  if (std::abs(g.radius - loop.radius) > 1e-12 * loop.radius)
    throw InvalidArgument("solve_neumann: flux radius does not match the mesh boundary");
  const auto nv = static_cast<Eigen::Index>(problem.mesh().num_vertices());
  Eigen::MatrixXd loads = Eigen::MatrixXd::Zero(nv, 2);
  const double norm = 1.0 / std::sqrt(2.0 * pi * loop.radius);
  for (int i = 0; i < loop.size(); ++i) {
    cplx b{};
    for (int n = -g.half_order; n <= g.half_order; ++n)
      if (n != 0)
        b += g.mode(n) * detail::hat_weight(loop, n) * std::polar(1.0, n * loop.angles[i]);
    b *= norm;
    loads(loop.vertices[i], 0) = b.real();
    loads(loop.vertices[i], 1) = b.imag();
  }
  const Eigen::MatrixXd u = problem.solve(loads);
  FemSolution sol;
  sol.mesh = &problem.mesh();
  sol.values = u.col(0).cast<cplx>() + I * u.col(1).cast<cplx>();
  sol.constraint = FemSolution::Constraint::BoundaryMeanZero;
  return sol;
}

inline FemSolution solve_neumann(const Mesh &mesh, const ConductivityField &sigma, const FourierVector &g) {
  NeumannProblem p(mesh, sigma);
  auto sol = solve_neumann(p, g);
  sol.mesh = &mesh;
  return sol;
}

//! 2N x 2N Neumann-to-Dirichlet matrix on the boundary of a disc mesh.
inline BoundaryOperatorMatrix nd_matrix(const NeumannProblem &problem, int N) {
  const auto &loop = problem.boundary();
  detail::check_loop_resolution(loop, N, "nd_matrix");
  const auto nv = static_cast<Eigen::Index>(problem.mesh().num_vertices());
  Eigen::MatrixXd loads(nv, 2 * N);
  for (int n = 1; n <= N; ++n) {
    loads.col(2 * (n - 1)) = problem.trig_load(n, 0);
    loads.col(2 * (n - 1) + 1) = problem.trig_load(n, 1);
  }
  const Eigen::MatrixXd u = problem.solve(loads);
  const double norm = 1.0 / std::sqrt(2.0 * pi * loop.radius);
  BoundaryOperatorMatrix R(OperatorKind::ND, loop.radius, loop.radius, N);
  for (int n = 1; n <= N; ++n) {
    const auto uc = u.col(2 * (n - 1));
    const auto us = u.col(2 * (n - 1) + 1);
    const CVector cc = detail::trace_coefficients(loop, uc, N);
    const CVector cs = detail::trace_coefficients(loop, us, N);
    for (int l = -N; l <= N; ++l) {
      if (l == 0)
        continue;
      R(l, n) = norm * (cc(l + N) + I * cs(l + N));
    }
  }
  for (int n = 1; n <= N; ++n)
    for (int l = -N; l <= N; ++l)
      if (l != 0)
        R(-l, -n) = std::conj(R(l, n));
  return R;
}

inline BoundaryOperatorMatrix nd_matrix(const Mesh &mesh, const ConductivityField &sigma, int N) {
  return nd_matrix(NeumannProblem(mesh, sigma), N);
}

//! Factorized Dirichlet problem: every boundary-loop node is prescribed.
class DirichletProblem {
public:
  DirichletProblem(const Mesh &mesh, const ConductivityField &sigma) : mesh_(&mesh) {
    K_ = assemble_stiffness(mesh, sigma);
    const auto nv = mesh.num_vertices();
    interior_index_.assign(nv, 0);
    std::vector<char> on_boundary(nv, 0);
    for (const auto &loop : mesh.boundary_loops)
      for (int v : loop.vertices)
        on_boundary[v] = 1;
    int ni = 0;
    for (std::size_t v = 0; v < nv; ++v)
      interior_index_[v] = on_boundary[v] ? -1 : ni++;
    std::vector<Eigen::Triplet<double>> tii;
    for (int k = 0; k < K_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(K_, k); it; ++it) {
        const int r = interior_index_[it.row()], c = interior_index_[it.col()];
        if (r >= 0 && c >= 0)
          tii.emplace_back(r, c, it.value());
      }
    num_interior_ = ni;
    SparseMatrix Kii(ni, ni);
    Kii.setFromTriplets(tii.begin(), tii.end());
    llt_.compute(Kii);
    if (llt_.info() != Eigen::Success)
      throw SingularMatrixError("DirichletProblem: stiffness factorization failed", INFINITY);
  }

  const Mesh &mesh() const { return *mesh_; }
  const SparseMatrix &stiffness() const { return K_; }

  //! Extends boundary values (full-length vectors, interior entries ignored)
  //! to discrete-harmonic solutions, one per column.
  Eigen::MatrixXd solve(const Eigen::MatrixXd &boundary_values) const {
    const auto nv = static_cast<Eigen::Index>(mesh_->num_vertices());
    Eigen::MatrixXd ub = boundary_values;
    for (Eigen::Index v = 0; v < nv; ++v)
      if (interior_index_[v] >= 0)
        ub.row(v).setZero();
    const Eigen::MatrixXd Ku = K_ * ub;
    Eigen::MatrixXd rhs(num_interior_, ub.cols());
    for (Eigen::Index v = 0; v < nv; ++v)
      if (interior_index_[v] >= 0)
        rhs.row(interior_index_[v]) = -Ku.row(v);
    const Eigen::MatrixXd ui = llt_.solve(rhs);
    Eigen::MatrixXd u = ub;
    for (Eigen::Index v = 0; v < nv; ++v)
      if (interior_index_[v] >= 0)
        u.row(v) = ui.row(interior_index_[v]);
    return u;
  }

private:
  const Mesh *mesh_;
  SparseMatrix K_;
  std::vector<int> interior_index_;
  int num_interior_ = 0;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

namespace detail {

// Columns of the flux matrix from loop `src` (Dirichlet data phi_n there,
// zero on the other loops) to loop `dst`, with radial sign `sign`.
inline BoundaryOperatorMatrix dirichlet_flux_block(const DirichletProblem &p, int src, int dst, int N,
                                                   double sign, const Eigen::MatrixXd &Ku_cols) {
  const auto &ls = p.mesh().boundary_loops[src];
  const auto &ld = p.mesh().boundary_loops[dst];
  BoundaryOperatorMatrix L(OperatorKind::DNBlock, ls.radius, ld.radius, N);
  const double in_norm = 1.0 / std::sqrt(2.0 * pi * ls.radius);
  const double out_norm = 1.0 / std::sqrt(2.0 * pi * ld.radius);
  // Ku_cols: columns cos 0, cos 1, sin 1, ..., cos N, sin N
  for (int n = 0; n <= N; ++n) {
    const int cc = n == 0 ? 0 : 2 * n - 1;
    for (int l = -N; l <= N; ++l) {
      cplx ac{}, as{};
      for (int b = 0; b < ld.size(); ++b) {
        const cplx w = std::polar(1.0, -double(l) * ld.angles[b]);
        ac += w * Ku_cols(ld.vertices[b], cc);
        if (n > 0)
          as += w * Ku_cols(ld.vertices[b], cc + 1);
      }
      const double f = sign * in_norm * out_norm;
      L(l, n) = f * (ac + I * as);
      if (n > 0)
        L(l, -n) = f * (ac - I * as);
    }
  }
  return L;
}

inline Eigen::MatrixXd trig_boundary_data(const Mesh &mesh, int loop_id, int N) {
  const auto &loop = mesh.boundary_loops[loop_id];
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(mesh.num_vertices(), 2 * N + 1);
  for (int i = 0; i < loop.size(); ++i) {
    const int v = loop.vertices[i];
    U(v, 0) = 1.0;
    for (int n = 1; n <= N; ++n) {
      U(v, 2 * n - 1) = std::cos(n * loop.angles[i]);
      U(v, 2 * n) = std::sin(n * loop.angles[i]);
    }
  }
  return U;
}

} // namespace detail

//! The four Dirichlet-to-Neumann blocks of an annulus r1 < rho < r2.
//! L<ij> maps Dirichlet data on circle j (zero on the other circle) to the
//! radial flux sigma du/drho on circle i.
struct AnnulusBlocks {
  BoundaryOperatorMatrix L11, L12, L21, L22;
  double r1 = 1.0, r2 = 1.2;
};

inline AnnulusBlocks dn_quadruple(const Mesh &annulus, const ConductivityField &sigma_tilde, int N) {
  if (annulus.boundary_loops.size() != 2)
    throw InvalidArgument("dn_quadruple: expects an annulus mesh");
  for (const auto &loop : annulus.boundary_loops)
    detail::check_loop_resolution(loop, N, "dn_quadruple");
  DirichletProblem p(annulus, sigma_tilde);
  AnnulusBlocks out;
  out.r1 = annulus.boundary_loops[0].radius;
  out.r2 = annulus.boundary_loops[1].radius;
  // inner circle: outward annulus normal is -rho, so the radial flux is -(K u)
  for (int j = 0; j < 2; ++j) {
    const Eigen::MatrixXd u = p.solve(detail::trig_boundary_data(annulus, j, N));
    const Eigen::MatrixXd Ku = p.stiffness() * u;
    auto Li1 = detail::dirichlet_flux_block(p, j, 0, N, -1.0, Ku);
    auto Li2 = detail::dirichlet_flux_block(p, j, 1, N, +1.0, Ku);
    if (j == 0) {
      out.L11 = std::move(Li1);
      out.L21 = std::move(Li2);
    } else {
      out.L12 = std::move(Li1);
      out.L22 = std::move(Li2);
    }
  }
  return out;
}

//! DN matrix on the boundary of a disc mesh, with the zero-block convention.
inline BoundaryOperatorMatrix dn_direct(const Mesh &disc, const ConductivityField &gamma, int N) {
  if (disc.boundary_loops.size() != 1)
    throw InvalidArgument("dn_direct: expects a disc mesh");
  detail::check_loop_resolution(disc.boundary_loops[0], N, "dn_direct");
  DirichletProblem p(disc, gamma);
  const Eigen::MatrixXd u = p.solve(detail::trig_boundary_data(disc, 0, N));
  const Eigen::MatrixXd Ku = p.stiffness() * u;
  auto L = detail::dirichlet_flux_block(p, 0, 0, N, +1.0, Ku);
  L.kind = OperatorKind::DN;
  impose_zero_block(L);
  return L;
}

} // namespace eitbc

#pragma once
// DN matrix on the outer circle from the inner DN matrix and the annulus
// blocks:
//     L_gamma = L22 + L21 (L_sigma - L11)^{-1} L12.
// Fluxes are radial (d/drho) on both circles, matching dn_quadruple.

#include <cmath>
#include <utility>
#include <vector>

#include "eitbc/boundary_basis.hpp"
#include "eitbc/error.hpp"
#include "eitbc/fem_forward.hpp"
#include "eitbc/mesh.hpp"

namespace eitbc {

struct SchurReport {
  double condition_estimate = 1.0; // of L_sigma - L11
  double solve_residual = 0.0;     // ||A X - L12|| / ||L12||
  double symmetry_defect = 0.0;    // conjugate symmetry of the output
  double r2 = 0.0;
};

inline constexpr double schur_condition_limit = 1e8;

inline std::pair<BoundaryOperatorMatrix, SchurReport> schur_outer(const BoundaryOperatorMatrix &L_sigma,
                                                                  const AnnulusBlocks &blocks) {
  const int N = L_sigma.half_order;
  for (const auto *B : {&blocks.L11, &blocks.L12, &blocks.L21, &blocks.L22})
    if (B->half_order != N || B->size() != 2 * N + 1)
      throw InvalidArgument("schur_outer: block sizes do not match the inner DN matrix");
  if (L_sigma.kind != OperatorKind::DN)
    throw InvalidArgument("schur_outer: inner operator must be a DN matrix");
  const CMatrix A = L_sigma.entries - blocks.L11.entries;
  SchurReport rep;
  rep.r2 = blocks.r2;
  rep.condition_estimate = condition_estimate(A);
  if (!(rep.condition_estimate <= schur_condition_limit))
    throw SingularMatrixError("schur_outer: L_sigma - L11 is not safely invertible", rep.condition_estimate);
  Eigen::PartialPivLU<CMatrix> lu(A);
  const CMatrix X = lu.solve(blocks.L12.entries);
  const double n12 = blocks.L12.entries.norm();
  rep.solve_residual = n12 > 0 ? (A * X - blocks.L12.entries).norm() / n12 : 0.0;
  BoundaryOperatorMatrix out(OperatorKind::DN, blocks.r2, blocks.r2, N);
  out.entries = blocks.L22.entries + blocks.L21.entries * X;
  impose_zero_block(out);
  rep.symmetry_defect = out.conjugate_symmetry_defect();
  return {std::move(out), rep};
}

//! Exact annulus blocks for unit conductivity: v(rho) = a rho^|n| + b rho^-|n|
//! (n != 0) or a + b log rho (n = 0), with v = 1 on the data circle and 0 on
//! the other; entry (n, n) of L<ij> is v'(r_i) sqrt(r_i / r_j).
inline AnnulusBlocks analytic_unit_annulus_blocks(double r1, double r2, int N) {
  if (!(r2 > r1 && r1 > 0.0))
    throw InvalidArgument("analytic_unit_annulus_blocks: need 0 < r1 < r2");
  AnnulusBlocks B;
  B.r1 = r1;
  B.r2 = r2;
  B.L11 = BoundaryOperatorMatrix(OperatorKind::DNBlock, r1, r1, N);
  B.L12 = BoundaryOperatorMatrix(OperatorKind::DNBlock, r2, r1, N);
  B.L21 = BoundaryOperatorMatrix(OperatorKind::DNBlock, r1, r2, N);
  B.L22 = BoundaryOperatorMatrix(OperatorKind::DNBlock, r2, r2, N);
  const double r[2] = {r1, r2};
  for (int n = -N; n <= N; ++n) {
    const int m = std::abs(n);
    for (int j = 0; j < 2; ++j) {
      const double rj = r[j], ro = r[1 - j];
      // v(rj) = 1, v(ro) = 0
      auto dv = [&](double rho) {
        if (m == 0) {
          const double b = 1.0 / std::log(rj / ro);
          return b / rho;
        }
        // a rj^m + b rj^-m = 1, a ro^m + b ro^-m = 0
        const double det = std::pow(rj / ro, m) - std::pow(ro / rj, m);
        const double a = std::pow(ro, -m) / det;
        const double b = -std::pow(ro, m) / det;
        return m * (a * std::pow(rho, m - 1) - b * std::pow(rho, -m - 1));
      };
      for (int i = 0; i < 2; ++i) {
        const double val = dv(r[i]) * std::sqrt(r[i] / rj);
        BoundaryOperatorMatrix &T = i == 0 ? (j == 0 ? B.L11 : B.L12) : (j == 0 ? B.L21 : B.L22);
        T(n, n) = val;
      }
    }
  }
  return B;
}

struct SweepRow {
  double r2 = 0.0;
  double err_vs_direct = 0.0;  // noisy assembled vs directly computed outer DN
  double err_noise = 0.0;      // noisy assembled vs noiseless assembled
  double condition = 0.0;      // of L_sigma^eps - L11
};

struct SweepOptions {
  int mesh_level = 3;
  int N = 16;
};

//! Propagation of the unit-conductivity DN data to circles of radius r2.
inline std::vector<SweepRow> sweep_r2(const BoundaryOperatorMatrix &L_clean, const BoundaryOperatorMatrix &L_noisy,
                                      const std::vector<double> &r2_list, const SweepOptions &opt = {}) {
  std::vector<SweepRow> rows;
  const double r1 = L_clean.out_radius;
  for (double r2 : r2_list) {
    if (!(r2 > r1))
      throw InvalidArgument("sweep_r2: every r2 must exceed r1");
    const Mesh ann = mesh_annulus(r1, r2, opt.mesh_level);
    const auto blocks = dn_quadruple(ann, ConductivityField::constant(1.0, Region::annulus(r1, r2)), opt.N);
    const auto [Lc, repc] = schur_outer(L_clean, blocks);
    const auto [Ln, repn] = schur_outer(L_noisy, blocks);
    const Mesh disc = mesh_disc(r2, opt.mesh_level);
    const auto Ld = dn_direct(disc, ConductivityField::constant(1.0, Region::disc(r2)), opt.N);
    SweepRow row;
    row.r2 = r2;
    row.err_vs_direct = relative_error(Ln, Ld);
    row.err_noise = relative_error(Ln, Lc);
    row.condition = repn.condition_estimate;
    rows.push_back(row);
  }
  return rows;
}

//! True when the sequence decreases except for at most `allowed` upticks.
inline bool mostly_decreasing(const std::vector<double> &v, int allowed = 1) {
  int up = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1])
      ++up;
  return up <= allowed;
}

} // namespace eitbc

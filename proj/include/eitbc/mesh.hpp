#pragma once
// Structured polar triangulations of discs and annuli.
//
// Disc meshes are built from concentric rings: ring j (j = 1..J) carries 6 j
// equally spaced nodes starting at angle 0, the centre is a single node, and
// neighbouring rings are stitched by an angular merge.  That gives exactly
// 6 J^2 triangles; with J = base_rings * 2^level the count quadruples per
// level.  The default base of 13 rings gives 1014 triangles at level 0 and
// 64896 (the desk-scale mesh) at level 3.
//
// Annulus meshes use K + 1 rings with the same number of nodes each and split
// every quadrilateral cell into two triangles (2 K n_ang triangles).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "eitbc/error.hpp"

namespace eitbc {

struct Point {
  double x = 0.0, y = 0.0;
};

//! Boundary nodes of one circle, ordered by increasing angle.
struct BoundaryLoop {
  double radius = 0.0;
  std::vector<int> vertices;
  std::vector<double> angles;
  int size() const { return static_cast<int>(vertices.size()); }
};

struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryLoop> boundary_loops; // disc: {outer}; annulus: {inner, outer}
  int refinement_level = 0;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  double signed_area(const std::array<int, 3> &t) const {
    const Point &a = vertices[t[0]], &b = vertices[t[1]], &c = vertices[t[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  }

  double area() const {
    double s = 0.0;
    for (const auto &t : triangles)
      s += signed_area(t);
    return s;
  }

  Point centroid(const std::array<int, 3> &t) const {
    const Point &a = vertices[t[0]], &b = vertices[t[1]], &c = vertices[t[2]];
    return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
  }
};

struct DiscMeshOptions {
  int base_rings = 13;
  //! When positive (and below r), a ring is placed exactly at this radius;
  //! base_outer_rings rings (times 2^level) fill the gap to r.
  double interface_radius = 0.0;
  int base_outer_rings = 0;
};

namespace detail {

inline void add_triangle(Mesh &m, int a, int b, int c) {
  std::array<int, 3> t{a, b, c};
  if (m.signed_area(t) < 0)
    std::swap(t[1], t[2]);
  m.triangles.push_back(t);
}

// Stitches ring `inner` (na nodes, first at angle 0) to ring `outer`
// (nb nodes, first at angle 0).
inline void stitch_rings(Mesh &m, int inner, int na, int outer, int nb) {
  int i = 0, j = 0;
  while (i < na || j < nb) {
    const double next_in = double(i + 1) / na;
    const double next_out = double(j + 1) / nb;
    if (j < nb && (i >= na || next_out <= next_in)) {
      add_triangle(m, inner + i % na, outer + j, outer + (j + 1) % nb);
      ++j;
    } else {
      add_triangle(m, inner + i, inner + (i + 1) % na, outer + j % nb);
      ++i;
    }
  }
}

} // namespace detail

inline Mesh mesh_disc(double r, int level, const DiscMeshOptions &opt = {}) {
  if (!(r > 0.0) || level < 0 || opt.base_rings < 1)
    throw InvalidArgument("mesh_disc: need r > 0, level >= 0, base_rings >= 1");
  const int scale = 1 << level;
  const bool iface = opt.interface_radius > 0.0 && opt.interface_radius < r;
  int j_in = opt.base_rings * scale;
  int j_out = 0;
  if (iface) {
    j_out = opt.base_outer_rings > 0
                ? opt.base_outer_rings * scale
                : int(std::ceil(opt.base_rings * (r - opt.interface_radius) / opt.interface_radius - 1e-12)) * scale;
    j_out = std::max(j_out, 1);
  }
  const int J = j_in + j_out;
  auto ring_radius = [&](int j) {
    if (!iface)
      return r * double(j) / J;
    if (j <= j_in)
      return opt.interface_radius * double(j) / j_in;
    return opt.interface_radius + (r - opt.interface_radius) * double(j - j_in) / j_out;
  };

  Mesh m;
  m.refinement_level = level;
  m.vertices.reserve(1 + 3 * std::size_t(J) * (J + 1));
  m.vertices.push_back({0.0, 0.0});
  std::vector<int> ring_start(J + 1, 0);
  for (int j = 1; j <= J; ++j) {
    ring_start[j] = static_cast<int>(m.vertices.size());
    const int n = 6 * j;
    const double rho = (j == J) ? r : ring_radius(j);
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * std::numbers::pi * i / n;
      m.vertices.push_back({rho * std::cos(th), rho * std::sin(th)});
    }
  }
  m.triangles.reserve(6 * std::size_t(J) * J);
  for (int i = 0; i < 6; ++i)
    detail::add_triangle(m, 0, ring_start[1] + i, ring_start[1] + (i + 1) % 6);
  for (int j = 1; j < J; ++j)
    detail::stitch_rings(m, ring_start[j], 6 * j, ring_start[j + 1], 6 * (j + 1));

  BoundaryLoop loop;
  loop.radius = r;
  for (int i = 0; i < 6 * J; ++i) {
    loop.vertices.push_back(ring_start[J] + i);
    loop.angles.push_back(2.0 * std::numbers::pi * i / (6 * J));
  }
  m.boundary_loops.push_back(std::move(loop));
  return m;
}

struct AnnulusMeshOptions {
  //! Angular nodes per ring at level 0.
  int base_angular = 78;
  //! Radial layers at level 0; 0 picks a count giving near-square cells.
  int base_layers = 0;
};

inline Mesh mesh_annulus(double r1, double r2, int level, const AnnulusMeshOptions &opt = {}) {
  if (!(r1 > 0.0) || !(r2 > r1) || level < 0)
    throw InvalidArgument("mesh_annulus: need 0 < r1 < r2 and level >= 0");
  const int scale = 1 << level;
  const int n = opt.base_angular * scale;
  int k0 = opt.base_layers;
  if (k0 <= 0)
    k0 = std::max(1, int(std::ceil((r2 - r1) * opt.base_angular / (2.0 * std::numbers::pi * r1) - 1e-12)));
  const int K = k0 * scale;

  Mesh m;
  m.refinement_level = level;
  m.vertices.reserve(std::size_t(K + 1) * n);
  for (int k = 0; k <= K; ++k) {
    const double rho = (k == K) ? r2 : r1 + (r2 - r1) * double(k) / K;
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * std::numbers::pi * i / n;
      m.vertices.push_back({rho * std::cos(th), rho * std::sin(th)});
    }
  }
  m.triangles.reserve(2 * std::size_t(K) * n);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < n; ++i) {
      const int a = k * n + i, b = k * n + (i + 1) % n;
      const int c = (k + 1) * n + i, d = (k + 1) * n + (i + 1) % n;
      detail::add_triangle(m, a, b, d);
      detail::add_triangle(m, a, d, c);
    }
  for (int side = 0; side < 2; ++side) {
    BoundaryLoop loop;
    loop.radius = side == 0 ? r1 : r2;
    const int base = side == 0 ? 0 : K * n;
    for (int i = 0; i < n; ++i) {
      loop.vertices.push_back(base + i);
      loop.angles.push_back(2.0 * std::numbers::pi * i / n);
    }
    m.boundary_loops.push_back(std::move(loop));
  }
  return m;
}

} // namespace eitbc

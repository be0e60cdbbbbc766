#pragma once
// Closed-form test conductivities on the unit disc.
//
// Each phantom is background 1 plus a sum of terms with C^2 profiles:
//   bump        a (1 - (d/w)^2)^3 for d < w
//   disk        a S((rho0 - d)/edge), S the quintic smootherstep clamped to [0,1]
//   layer       a S((y0 - y)/edge)          (horizontal sediment)
//   radial_step a S((rho0 - rho)/edge)
//   linear_x    a x
// The four examples are parametric stand-ins built from verbal descriptions,
// not reproductions of any published formulas.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"

#include "eitbc/conductivity.hpp"
#include "eitbc/error.hpp"

namespace eitbc {

struct PhantomTerm {
  std::string kind; // bump | disk | layer | radial_step | linear_x
  double cx = 0.0, cy = 0.0;
  double size = 0.0; // w for bump, rho0 for disk/radial_step, y0 for layer
  double edge = 0.0;
  double amplitude = 0.0;
};

namespace detail {

inline double smootherstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

inline double term_value(const PhantomTerm &t, double x, double y) {
  if (t.kind == "bump") {
    const double s = std::hypot(x - t.cx, y - t.cy) / t.size;
    if (s >= 1.0)
      return 0.0;
    const double q = 1.0 - s * s;
    return t.amplitude * q * q * q;
  }
  if (t.kind == "disk")
    return t.amplitude * smootherstep((t.size - std::hypot(x - t.cx, y - t.cy)) / t.edge);
  if (t.kind == "layer")
    return t.amplitude * smootherstep((t.size - y) / t.edge);
  if (t.kind == "radial_step")
    return t.amplitude * smootherstep((t.size - std::hypot(x, y)) / t.edge);
  if (t.kind == "linear_x")
    return t.amplitude * x;
  throw InvalidArgument("unknown phantom term '" + t.kind + "'");
}

} // namespace detail

struct Phantom {
  std::string name;
  std::string description;
  double background = 1.0;
  std::vector<PhantomTerm> terms;

  double operator()(double x, double y) const {
    double s = background;
    for (const auto &t : terms)
      s += detail::term_value(t, x, y);
    return s;
  }
  double trace(double theta, double r = 1.0) const { return (*this)(r * std::cos(theta), r * std::sin(theta)); }

  ConductivityField field(double r = 1.0) const {
    const Phantom copy = *this;
    const Smoothness tag = terms.empty() ? Smoothness::Constant : Smoothness::Smooth;
    return ConductivityField([copy](double x, double y) { return copy(x, y); }, Region::disc(r), tag);
  }

  //! max over theta of |sigma(1, theta) - 1|, sampled.
  double boundary_deviation(int n = 4096) const {
    double d = 0.0;
    for (int i = 0; i < n; ++i)
      d = std::max(d, std::abs(trace(2.0 * std::numbers::pi * i / n) - background));
    return d;
  }
};

inline void to_json(nlohmann::json &j, const PhantomTerm &t) {
  j = {{"kind", t.kind}, {"cx", t.cx}, {"cy", t.cy}, {"size", t.size}, {"edge", t.edge}, {"amplitude", t.amplitude}};
}
inline void from_json(const nlohmann::json &j, PhantomTerm &t) {
  t.kind = j.at("kind").get<std::string>();
  t.cx = j.value("cx", 0.0);
  t.cy = j.value("cy", 0.0);
  t.size = j.value("size", 0.0);
  t.edge = j.value("edge", 0.0);
  t.amplitude = j.at("amplitude").get<double>();
}
inline void to_json(nlohmann::json &j, const Phantom &p) {
  j = {{"name", p.name}, {"description", p.description}, {"background", p.background}, {"terms", p.terms}};
}
inline void from_json(const nlohmann::json &j, Phantom &p) {
  p.name = j.at("name").get<std::string>();
  p.description = j.value("description", "");
  p.background = j.value("background", 1.0);
  p.terms = j.value("terms", std::vector<PhantomTerm>{});
}

inline const std::vector<std::string> &phantom_names() {
  static const std::vector<std::string> names{"example1", "example2", "example3", "example4",
                                              "unit",     "radial2layer", "smoothtrace"};
  return names;
}

inline const std::vector<std::string> &example_phantom_names() {
  static const std::vector<std::string> names{"example1", "example2", "example3", "example4"};
  return names;
}

inline Phantom phantom(const std::string &name) {
  const double c45 = std::sqrt(0.5);
  Phantom p;
  p.name = name;
  if (name == "unit") {
    p.description = "constant conductivity 1";
  } else if (name == "example1") {
    p.description = "high-contrast bump on the boundary and a small conductive inclusion near the boundary";
    p.terms = {{"bump", c45, c45, 0.5, 0.0, 3.0}, {"disk", -0.45, -0.2, 0.22, 0.08, 1.0}};
  } else if (name == "example2") {
    p.description = "boundary bump as in example1 with a larger, more conductive inclusion";
    p.terms = {{"bump", c45, c45, 0.45, 0.0, 2.0}, {"disk", -0.35, -0.2, 0.35, 0.1, 2.0}};
  } else if (name == "example3") {
    p.description = "high-contrast bump whose maximum lies just inside the boundary";
    p.terms = {{"bump", 0.0, 0.8, 0.5, 0.0, 4.0}};
  } else if (name == "example4") {
    p.description = "pipe cross-section: conductive sediment at the bottom and two resistive round inclusions";
    p.terms = {{"layer", 0.0, 0.0, -0.6, 0.1, 1.5},
               {"disk", -0.35, 0.2, 0.2, 0.08, -0.7},
               {"disk", 0.35, 0.25, 0.18, 0.08, -0.7}};
  } else if (name == "radial2layer") {
    p.description = "radial two-layer conductivity, 2 inside radius 0.6 and 1 outside";
    p.terms = {{"radial_step", 0.0, 0.0, 0.6, 0.1, 1.0}};
  } else if (name == "smoothtrace") {
    p.description = "affine conductivity 1 + 0.5 x with trace 1 + 0.5 cos(theta)";
    p.terms = {{"linear_x", 0.0, 0.0, 0.0, 0.0, 0.5}};
  } else {
    throw InvalidArgument("unknown phantom '" + name + "'");
  }
  return p;
}

//! All built-in phantoms as one JSON document.
inline nlohmann::json phantom_catalog() {
  nlohmann::json j = nlohmann::json::array();
  for (const auto &n : phantom_names())
    j.push_back(phantom(n));
  return j;
}

} // namespace eitbc

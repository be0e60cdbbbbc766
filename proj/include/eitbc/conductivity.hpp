#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "eitbc/error.hpp"

namespace eitbc {

//! Where a conductivity is defined.
struct Region {
  enum class Shape { Disc, Annulus } shape = Shape::Disc;
  double inner = 0.0; // annulus only
  double outer = 1.0;

  static Region disc(double r) { return {Shape::Disc, 0.0, r}; }
  static Region annulus(double r1, double r2) { return {Shape::Annulus, r1, r2}; }

  bool contains(double x, double y, double slack = 1e-9) const {
    const double rho = std::hypot(x, y);
    if (rho > outer * (1 + slack))
      return false;
    return shape == Shape::Disc || rho >= inner * (1 - slack);
  }
};

enum class Smoothness { Constant, Smooth, Piecewise };

//! A strictly positive scalar field evaluable at arbitrary points.
class ConductivityField {
public:
  using Evaluator = std::function<double(double, double)>;

  ConductivityField() : ConductivityField(constant(1.0, Region::disc(1.0))) {}
  ConductivityField(Evaluator f, Region region, Smoothness tag = Smoothness::Smooth)
      : eval_(std::make_shared<Evaluator>(std::move(f))), region_(region), tag_(tag) {}

  static ConductivityField constant(double value, Region region) {
    if (!(value > 0.0))
      throw InvalidArgument("ConductivityField: constant must be positive");
    return {[value](double, double) { return value; }, region, Smoothness::Constant};
  }

  double operator()(double x, double y) const { return (*eval_)(x, y); }
  double polar(double rho, double theta) const { return (*this)(rho * std::cos(theta), rho * std::sin(theta)); }

  const Region &region() const { return region_; }
  Smoothness smoothness() const { return tag_; }

  //! Smallest value on an n x n grid over the region.
  double sampled_minimum(int n = 256) const {
    double m = std::numeric_limits<double>::infinity();
    const double R = region_.outer;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = -R + (i + 0.5) * 2 * R / n;
        const double y = -R + (j + 0.5) * 2 * R / n;
        if (region_.contains(x, y))
          m = std::min(m, (*this)(x, y));
      }
    return m;
  }

  //! Throws unless the sampled minimum is at least c0.
  void check_positive(double c0 = 1e-12, int n = 256) const {
    const double m = sampled_minimum(n);
    if (!(m >= c0))
      throw InvalidArgument("conductivity is not strictly positive (sampled minimum " + std::to_string(m) + ")");
  }

  //! Same field seen after rotating the plane by phi.
  ConductivityField rotated(double phi) const {
    auto inner = eval_;
    const double c = std::cos(phi), s = std::sin(phi);
    return {[inner, c, s](double x, double y) { return (*inner)(c * x + s * y, -s * x + c * y); }, region_, tag_};
  }

private:
  std::shared_ptr<const Evaluator> eval_;
  Region region_;
  Smoothness tag_;
};

} // namespace eitbc

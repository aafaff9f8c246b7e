#pragma once

#include "isofem/core.hpp"

#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace isofem {

/// Smooth star-shaped domain described in polar form, boundary
/// gamma(theta) = r(theta) * (cos theta, sin theta), traversed counterclockwise.
///
/// Three families are supported: disk(R), ellipse(a, b) and
/// star(R0, eps, m) with r(theta) = R0 (1 + eps cos(m theta)). All are
/// C-infinity. The tubular radius delta0 = 0.5 / max|kappa| is computed once at
/// construction from 4096 curvature samples.
class Domain {
 public:
  enum class Kind { Disk, Ellipse, Star };

  static Domain disk(double radius);
  static Domain ellipse(double a, double b);
  /// Throws InvalidArgument unless eps * (1 + m^2) < 0.5.
  static Domain star(double base_radius, double amplitude, int frequency);

  /// Parses `disk:R`, `ellipse:a,b` or `star:R0,eps,m`.
  static Domain parse(std::string_view spec);

  Kind kind() const noexcept { return kind_; }
  std::string spec() const;

  // Radial function and its first two derivatives in theta.
  double radius(double theta) const;
  double radius_d1(double theta) const;
  double radius_d2(double theta) const;

  Point boundary_point(double theta) const;
  Point tangent(double theta) const;         // d gamma / d theta (not normalized)
  Point tangent_d1(double theta) const;      // d^2 gamma / d theta^2
  double curvature(double theta) const;      // signed, positive for convex parts

  double tubular_radius() const noexcept { return delta0_; }
  double max_curvature() const noexcept { return max_kappa_; }
  /// Largest value of r(theta).
  double max_radius() const noexcept { return max_radius_; }
  bool contains(const Point& x) const;
  /// Exact area of the domain, by quadrature of r^2/2 over theta.
  double area() const;

  // Parameters; meaning depends on kind.
  double param_a() const noexcept { return a_; }
  double param_b() const noexcept { return b_; }
  int frequency() const noexcept { return m_; }

 private:
  Domain(Kind kind, double a, double b, int m);

  Kind kind_;
  double a_ = 1.0;   // disk radius, ellipse semi-axis a, star base radius
  double b_ = 1.0;   // ellipse semi-axis b, star amplitude
  int m_ = 0;        // star frequency
  double delta0_ = 0.0;
  double max_kappa_ = 0.0;
  double max_radius_ = 0.0;
};

/// Function on the plane given in closed form.
struct ScalarField2D {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::function<double(const Point&)> laplacian;
  int smoothness = -1;  // -1 means C-infinity
  // laplacian may be left empty when only value and gradient are needed

  double operator()(const Point& x) const { return value(x); }
};

/// Exact solution u and forcing f = -Laplace(u) for the Poisson study.
struct ManufacturedProblem {
  ScalarField2D solution;
  ScalarField2D forcing;
};

/// Disk of radius R: u = (1 - |x|^2/R^2) sin(x + 2y).
/// Ellipse: u = (1 - x^2/a^2 - y^2/b^2) cos(x - y).
/// Throws InvalidArgument for star domains.
ManufacturedProblem manufactured_problem(const Domain& domain);

/// Constant, affine and polynomial helpers used throughout tests and studies.
ScalarField2D constant_field(double c);
ScalarField2D affine_field(double a, double b, double c);

struct BoundaryProjection {
  Point foot;     // nearest boundary point
  double t;       // signed distance, negative inside
  double theta;   // boundary parameter of foot, in [0, 2 pi)
};

/// Orthogonal projection onto the boundary by Newton iteration on
/// (x - gamma(theta)) . gamma'(theta) = 0, with a coarse-scan + bisection
/// fallback. Throws NotInTubularNeighborhood when |t| > delta0.
BoundaryProjection project_to_boundary(const Domain& domain, const Point& x);

/// Outward unit normal at boundary parameter theta.
Point unit_normal(const Domain& domain, double theta);

/// Reflection extension across the boundary with weights (6, -8, 3).
/// Inside the domain returns f(x). Throws OutOfRange if 3 t > delta0.
double extend_by_reflection(const Domain& domain,
                            const std::function<double(const Point&)>& f,
                            const Point& x);

/// Area of the tubular region { xbar + t n(xbar) : xbar in S, |t| < delta }
/// where S is the boundary arc swept by the ordered samples. If `closed`,
/// the arc wraps from the last sample back to the first.
double boundary_skin_measure(const Domain& domain, std::span<const Point> samples,
                             double delta, bool closed = false);

}  // namespace isofem

#pragma once

#include "isofem/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace isofem {

/// Gauss-Legendre nodes and weights on [0, 1] with n points (exact to 2n - 1).
template <typename Scalar = double>
struct GaussLegendre {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre needs n >= 1");
    const Scalar pi = std::numbers::pi_v<Scalar>;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      // Newton on P_n starting from the Chebyshev-like guess.
      Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
      Scalar dp = 0;
      for (int iter = 0; iter < 100; ++iter) {
        Scalar p0 = 1, p1 = x;
        for (int j = 2; j <= n; ++j) {
          const Scalar p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        const Scalar dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) <= 4 * std::numeric_limits<Scalar>::epsilon()) {
          // one more evaluation for the derivative at the converged node
          p0 = 1;
          p1 = x;
          for (int j = 2; j <= n; ++j) {
            const Scalar p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
            p0 = p1;
            p1 = p2;
          }
          dp = n * (x * p1 - p0) / (x * x - 1);
          break;
        }
      }
      const Scalar w = 2 / ((1 - x * x) * dp * dp);
      // map [-1, 1] -> [0, 1]
      nodes(i) = (1 - x) / 2;
      nodes(n - 1 - i) = (1 + x) / 2;
      weights(i) = w / 2;
      weights(n - 1 - i) = w / 2;
    }
    if (n % 2 == 1) nodes(n / 2) = Scalar(0.5);
  }

  int size() const { return static_cast<int>(nodes.size()); }
};

/// Quadrature rule on the reference triangle {x, y >= 0, x + y <= 1}.
/// Weights sum to the reference area 1/2.
template <typename Scalar = double>
struct QuadratureRule {
  Eigen::Matrix<Scalar, kDim, Eigen::Dynamic> points;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
  int exactness_degree = 0;

  int size() const { return static_cast<int>(weights.size()); }
  PointT<Scalar> point(int q) const { return points.col(q); }
};

inline constexpr int kMaxQuadratureDegree = 30;

/// Rule exact for polynomials of total degree <= `degree` on the reference
/// triangle, all weights positive and all points interior.
///
/// Degree 1 is the centroid rule. Higher degrees use the collapsed
/// (Duffy) tensor product of Gauss-Legendre rules.
template <typename Scalar = double>
QuadratureRule<Scalar> build_quadrature(int degree) {
  if (degree < 1 || degree > kMaxQuadratureDegree) {
    throw Error(ErrorCode::UnsupportedDegree,
                "quadrature degree " + std::to_string(degree) + " outside [1, 30]");
  }
  QuadratureRule<Scalar> rule;
  rule.exactness_degree = degree;
  if (degree == 1) {
    rule.points.resize(kDim, 1);
    rule.points.col(0).setConstant(Scalar(1) / 3);
    rule.weights.setConstant(1, Scalar(0.5));
    return rule;
  }
  // x = u, y = v (1 - u), dx dy = (1 - u) du dv; the u-integrand has degree
  // degree + 1, the v-integrand degree `degree`.
  const GaussLegendre<Scalar> gu((degree + 3) / 2);
  const GaussLegendre<Scalar> gv((degree + 2) / 2);
  rule.points.resize(kDim, gu.size() * gv.size());
  rule.weights.resize(gu.size() * gv.size());
  int q = 0;
  for (int i = 0; i < gu.size(); ++i) {
    for (int j = 0; j < gv.size(); ++j, ++q) {
      const Scalar u = gu.nodes(i);
      const Scalar v = gv.nodes(j);
      rule.points(0, q) = u;
      rule.points(1, q) = v * (1 - u);
      rule.weights(q) = gu.weights(i) * gv.weights(j) * (1 - u);
    }
  }
  return rule;
}

/// Polar rule on the disk of radius `radius` centred at `center`:
/// Gauss-Legendre in the radius, trapezoid in the angle. Suited to
/// integrands supported in the disk and flat at its rim.
template <typename Scalar = double>
QuadratureRule<Scalar> build_disk_rule(const PointT<Scalar>& center, Scalar radius,
                                       int n_radial, int n_angular) {
  const GaussLegendre<Scalar> g(n_radial);
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  QuadratureRule<Scalar> rule;
  rule.points.resize(kDim, n_radial * n_angular);
  rule.weights.resize(n_radial * n_angular);
  rule.exactness_degree = -1;
  int q = 0;
  for (int i = 0; i < n_radial; ++i) {
    const Scalar rho = radius * g.nodes(i);
    for (int j = 0; j < n_angular; ++j, ++q) {
      const Scalar phi = two_pi * (Scalar(j) + Scalar(0.5)) / Scalar(n_angular);
      rule.points(0, q) = center(0) + rho * std::cos(phi);
      rule.points(1, q) = center(1) + rho * std::sin(phi);
      rule.weights(q) = g.weights(i) * radius * rho * two_pi / Scalar(n_angular);
    }
  }
  return rule;
}

}  // namespace isofem

#pragma once

#include "isofem/greens.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace test {

// Integral of eta * v * |det J| over the reference triangle by a composite
// rule: n^2 congruent subtriangles, each with a degree-30 collapsed Gauss
// rule. Points where eta vanishes are dropped once at construction.
class OraclePairing {
 public:
  explicit OraclePairing(const isofem::RegularizedDelta& eta, int n = 64) {
    const isofem::CurvedMesh& mesh = eta.space->mesh();
    const auto rule = isofem::build_quadrature<double>(30);
    auto add = [&](const isofem::Point& a, const isofem::Point& b, const isofem::Point& c) {
      for (int q = 0; q < rule.size(); ++q) {
        const isofem::Point xhat = a + (b - a) * rule.point(q).x() + (c - a) * rule.point(q).y();
        const double e = eta.at_reference(xhat);
        if (e == 0.0) continue;
        const double det = std::abs(isofem::element_map(mesh, eta.element, xhat).jacobian.determinant());
        points_.push_back(xhat);
        weights_.push_back(rule.weights(q) * e * det / (n * n));
      }
    };
    for (int i = 0; i < n; ++i)
      for (int j = 0; i + j < n; ++j) {
        const isofem::Point p00(double(i) / n, double(j) / n), p10(double(i + 1) / n, double(j) / n),
            p01(double(i) / n, double(j + 1) / n), p11(double(i + 1) / n, double(j + 1) / n);
        add(p00, p10, p01);
        if (i + j < n - 1) add(p10, p11, p01);
      }
  }

  double operator()(const std::function<double(const isofem::Point&)>& vhat) const {
    double total = 0.0;
    for (std::size_t q = 0; q < points_.size(); ++q) total += weights_[q] * vhat(points_[q]);
    return total;
  }

 private:
  std::vector<isofem::Point> points_;
  std::vector<double> weights_;
};

}  // namespace test

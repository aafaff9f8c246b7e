#pragma once

#include "isofem/core.hpp"

#include <array>
#include <string>
#include <vector>

namespace isofem {

/// Position of a Lagrange node on the reference triangle with vertices
/// v0 = (0,0), v1 = (1,0), v2 = (0,1). Local edge e joins the two vertices
/// other than e: edge 0 = (v1, v2), edge 1 = (v2, v0), edge 2 = (v0, v1).
struct LatticeNode {
  std::array<int, 3> alpha{};  // barycentric multi-index, sums to k
  int vertex = -1;             // 0..2 if the node is a vertex
  int edge = -1;               // 0..2 if the node is interior to an edge
  int edge_position = -1;      // steps from the edge's first vertex, 1..k-1
  bool interior() const { return vertex < 0 && edge < 0; }
};

inline constexpr std::array<std::array<int, 2>, 3> kEdgeVertices{{{1, 2}, {2, 0}, {0, 1}}};

/// Lagrange P_k element on the uniform barycentric lattice. Basis functions
/// are held as monomial coefficient columns, so derivatives of any order are
/// available exactly.
///
/// Node order: the three vertices, then edge nodes edge by edge (ordered from
/// the edge's first vertex), then interior nodes.
template <typename Scalar = double>
class ReferenceElement {
 public:
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using GradientTable = Eigen::Matrix<Scalar, Eigen::Dynamic, kDim>;

  explicit ReferenceElement(int k) : k_(k) {
    if (k < 1 || k > 8) throw Error(ErrorCode::UnsupportedDegree, "Lagrange degree must be in [1, 8]");
    for (int a = 0; a <= k; ++a)
      for (int b = 0; a + b <= k; ++b) exponents_.push_back({a, b});

    // vertices
    for (int v = 0; v < 3; ++v) {
      LatticeNode n;
      n.alpha[v] = k;
      n.vertex = v;
      info_.push_back(n);
    }
    for (int e = 0; e < 3; ++e) {
      const auto [first, second] = kEdgeVertices[e];
      for (int s = 1; s < k; ++s) {
        LatticeNode n;
        n.alpha[first] = k - s;
        n.alpha[second] = s;
        n.edge = e;
        n.edge_position = s;
        info_.push_back(n);
      }
    }
    for (int i = 1; i < k; ++i)
      for (int j = 1; i + j < k; ++j) {
        LatticeNode n;
        n.alpha = {k - i - j, i, j};
        info_.push_back(n);
      }

    const int n = size();
    nodes_.resize(kDim, n);
    for (int i = 0; i < n; ++i) {
      nodes_(0, i) = Scalar(info_[i].alpha[1]) / Scalar(k);
      nodes_(1, i) = Scalar(info_[i].alpha[2]) / Scalar(k);
    }
    MatrixS vandermonde(n, n);
    for (int j = 0; j < n; ++j) vandermonde.row(j) = monomials(nodes_.col(j)).transpose();
    coefficients_ = vandermonde.fullPivLu().inverse();
  }

  int degree() const { return k_; }
  int size() const { return static_cast<int>(info_.size()); }
  static int size_for_degree(int k) { return (k + 1) * (k + 2) / 2; }

  const Eigen::Matrix<Scalar, kDim, Eigen::Dynamic>& nodes() const { return nodes_; }
  PointT<Scalar> node(int i) const { return nodes_.col(i); }
  const LatticeNode& node_info(int i) const { return info_[i]; }
  const std::vector<LatticeNode>& node_infos() const { return info_; }

  /// Values of all basis functions at x.
  VectorS values(const PointT<Scalar>& x) const { return coefficients_.transpose() * monomials(x); }

  /// Row i holds the reference gradient of basis function i.
  GradientTable gradients(const PointT<Scalar>& x) const {
    GradientTable g(size(), kDim);
    g.col(0) = derivatives(x, 1, 0);
    g.col(1) = derivatives(x, 0, 1);
    return g;
  }

  /// d^{dx + dy} phi_i / dx^dx dy^dy at x for all i.
  VectorS derivatives(const PointT<Scalar>& x, int dx, int dy) const {
    VectorS m(size());
    for (int j = 0; j < size(); ++j) {
      const auto [a, b] = exponents_[j];
      if (a < dx || b < dy) {
        m(j) = 0;
        continue;
      }
      Scalar c = 1;
      for (int t = 0; t < dx; ++t) c *= Scalar(a - t);
      for (int t = 0; t < dy; ++t) c *= Scalar(b - t);
      m(j) = c * ipow(x(0), a - dx) * ipow(x(1), b - dy);
    }
    return coefficients_.transpose() * m;
  }

 private:
  static Scalar ipow(Scalar base, int e) {
    Scalar r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
  }

  VectorS monomials(const PointT<Scalar>& x) const {
    VectorS m(size());
    for (int j = 0; j < size(); ++j) m(j) = ipow(x(0), exponents_[j][0]) * ipow(x(1), exponents_[j][1]);
    return m;
  }

  int k_;
  std::vector<std::array<int, 2>> exponents_;
  std::vector<LatticeNode> info_;
  Eigen::Matrix<Scalar, kDim, Eigen::Dynamic> nodes_;
  MatrixS coefficients_;  // column i: monomial coefficients of phi_i
};

/// Points of the barycentric lattice of the given order on the reference
/// triangle (order 0 gives the centroid).
template <typename Scalar = double>
Eigen::Matrix<Scalar, kDim, Eigen::Dynamic> barycentric_lattice(int order) {
  if (order == 0) {
    Eigen::Matrix<Scalar, kDim, Eigen::Dynamic> c(kDim, 1);
    c.setConstant(Scalar(1) / 3);
    return c;
  }
  Eigen::Matrix<Scalar, kDim, Eigen::Dynamic> pts(kDim, (order + 1) * (order + 2) / 2);
  int q = 0;
  for (int i = 0; i <= order; ++i)
    for (int j = 0; i + j <= order; ++j, ++q) {
      pts(0, q) = Scalar(i) / Scalar(order);
      pts(1, q) = Scalar(j) / Scalar(order);
    }
  return pts;
}

}  // namespace isofem

#pragma once

#include "isofem/core.hpp"
#include "isofem/geometry.hpp"
#include "isofem/quadrature.hpp"
#include "isofem/reference_element.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace isofem {

using PointSet = Eigen::Matrix<double, kDim, Eigen::Dynamic>;
using Triangle = std::array<Index, 3>;

struct BoundaryEdge {
  Index triangle = 0;
  int local_edge = 0;  // see kEdgeVertices
};

/// Conforming straight triangulation whose boundary vertices lie on the
/// domain boundary. Triangles are counterclockwise.
struct StraightTriangulation {
  PointSet vertices;
  std::vector<Triangle> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  double target_h = 0.0;

  Index n_vertices() const { return vertices.cols(); }
  Index n_triangles() const { return static_cast<Index>(triangles.size()); }
  Point vertex(Index i) const { return vertices.col(i); }

  double signed_area(Index t) const;
  double diameter(Index t) const;        // h_T, longest edge
  double inscribed_diameter(Index t) const;  // rho_T
  double max_h() const;
  double min_h() const;
  double shape_regularity() const;       // max h_T / rho_T
  double quasi_uniformity() const { return max_h() / min_h(); }
};

/// Edges owned by exactly one triangle, sorted by (triangle, local edge).
std::vector<BoundaryEdge> find_boundary_edges(const std::vector<Triangle>& triangles);

/// Structured ring triangulation of a star-shaped domain: hexagonal rings are
/// mapped radially onto the domain, interior vertices receive ten Jacobi
/// sweeps of Laplacian smoothing, boundary vertices stay on the boundary.
///
/// Requires 1e-4 <= h_target <= 4 delta0. Throws MeshGenerationFailed if
/// an element inverts or shape regularity exceeds `max_shape_regularity`.
StraightTriangulation triangulate(const Domain& domain, double h_target,
                                  double max_shape_regularity = 8.0);

enum class InteriorNodePlacement {
  Affine,   // interior lattice nodes at their straight-element positions
  Blended,  // interior nodes follow the boundary-edge displacement
};

struct CurveOptions {
  bool curve_boundary = true;  // false keeps the polygonal domain (control study)
  InteriorNodePlacement interior = InteriorNodePlacement::Blended;
};

/// P_k isoparametric mesh. Global node numbering: vertices first, then edge
/// nodes, then element-interior nodes.
class CurvedMesh {
 public:
  CurvedMesh() = default;

  const StraightTriangulation& base() const { return base_; }
  int degree() const { return k_; }
  const ReferenceElement<double>& reference() const { return *reference_; }
  std::shared_ptr<const ReferenceElement<double>> reference_ptr() const { return reference_; }
  int nodes_per_element() const { return reference_->size(); }

  Index n_elements() const { return base_.n_triangles(); }
  Index n_nodes() const { return nodes_.cols(); }
  const PointSet& nodes() const { return nodes_; }
  Point node(Index a) const { return nodes_.col(a); }
  bool is_boundary_node(Index a) const { return boundary_flags_[a] != 0; }
  const std::vector<char>& boundary_flags() const { return boundary_flags_; }

  /// Global index of local node i of element t.
  Index global_node(Index t, int i) const { return node_map_[t * nodes_per_element() + i]; }
  std::span<const Index> element_nodes(Index t) const {
    return {node_map_.data() + t * nodes_per_element(), static_cast<std::size_t>(nodes_per_element())};
  }
  /// Geometric nodes a_i of element t, one per column.
  Eigen::Matrix<double, kDim, Eigen::Dynamic> geom_nodes(Index t) const;

  bool is_curved(Index t) const { return curved_[t] != 0; }
  bool touches_boundary(Index t) const;
  double h() const { return h_; }
  double element_h(Index t) const { return base_.diameter(t); }

  /// Affine map of the underlying straight triangle.
  Point affine_map(Index t, const Point& xhat) const;

  // Construction. `nodes` are global coordinates; `node_map` has
  // nodes_per_element entries per triangle.
  CurvedMesh(StraightTriangulation base, int k, PointSet nodes, std::vector<Index> node_map,
             std::vector<char> boundary_flags, std::vector<char> curved);

 private:
  StraightTriangulation base_;
  int k_ = 1;
  std::shared_ptr<const ReferenceElement<double>> reference_;
  PointSet nodes_;
  std::vector<Index> node_map_;
  std::vector<char> boundary_flags_;
  std::vector<char> curved_;
  double h_ = 0.0;
};

/// Places P_k lattice nodes on `tri`. Edge nodes of boundary edges are
/// projected onto the boundary; other nodes stay at affine positions unless
/// `options.interior` is Blended. Throws CurvingFailed on a non-positive
/// Jacobian at any quadrature point.
CurvedMesh curve_mesh(const StraightTriangulation& tri, const Domain& domain, int k,
                      const CurveOptions& options = {});

/// Same mesh with global nodes renumbered: new index of old node a is perm[a].
CurvedMesh permute_nodes(const CurvedMesh& mesh, std::span<const Index> perm);

struct ElementMapValue {
  Point x;
  Jacobian jacobian;
};

ElementMapValue element_map(const CurvedMesh& mesh, Index t, const Point& xhat);

/// Newton inversion of F_T. Throws NotInElement if the preimage lies outside
/// the reference triangle by more than 1e-10 (barycentric), NoConvergence if
/// 50 Newton steps do not reach |F(xhat) - x| <= 1e-12 h_T.
Point invert_element_map(const CurvedMesh& mesh, Index t, const Point& x);

/// Same Newton iteration without the inside test; returns false on failure.
bool try_invert_element_map(const CurvedMesh& mesh, Index t, const Point& x, Point& xhat);

/// Smallest barycentric coordinate of a reference point.
inline double min_barycentric(const Point& xhat) {
  return std::min({1.0 - xhat.x() - xhat.y(), xhat.x(), xhat.y()});
}

/// Measure of Omega_h by quadrature of det J.
double mesh_area(const CurvedMesh& mesh, int quadrature_degree = -1);

/// Bucket grid over element bounding boxes for point location.
class PointLocator {
 public:
  explicit PointLocator(const CurvedMesh& mesh);

  struct Hit {
    Index element = -1;
    Point xhat;
  };
  /// Throws PointNotInMesh if no element contains x.
  Hit locate(const Point& x) const;
  bool try_locate(const Point& x, Hit& hit) const;

 private:
  const CurvedMesh* mesh_;
  Eigen::AlignedBox<double, kDim> box_;
  int nx_ = 1, ny_ = 1;
  double cell_x_ = 1.0, cell_y_ = 1.0;
  std::vector<std::vector<Index>> buckets_;
  std::vector<Eigen::AlignedBox<double, kDim>> element_boxes_;
};

struct HypothesisReport {
  bool conforming = false;          // H1
  bool shape_regular = false;       // H2
  bool quasi_uniform = false;       // H2
  bool nodes_close = false;         // H4
  bool jacobian_positive = false;
  bool boundary_on_order = false;   // H8, measured distance within h^{k+1} scale

  double shape_regularity = 0.0;
  double quasi_uniformity = 0.0;
  double h4_constant = 0.0;
  std::vector<double> h6_constants;  // index m - 1 for m = 1..k+1
  double min_jacobian = 0.0;
  double min_jacobian_ratio = 0.0;   // det J / det J_affine
  double h8_sup_distance = 0.0;
  double h8_expected = 0.0;
  double h8_ratio() const { return h8_expected > 0 ? h8_sup_distance / h8_expected : 0.0; }
};

HypothesisReport verify_hypotheses(const CurvedMesh& mesh, const Domain& domain);

/// Minimum pairwise distance between degree-2k lattice samples of two elements.
double element_distance(const CurvedMesh& mesh, Index t, Index s);

struct DyadicScales {
  double d0 = 0.0;
  int levels = 0;  // J
  double scale(int j) const;
};

/// d0 = L h, J = ceil(log2(diam / d0)).
DyadicScales dyadic_scales(double diameter, double h, double stride_ratio);

struct DyadicDecomposition {
  Index center_element = -1;
  DyadicScales scales;
  double diameter = 0.0;
  std::vector<int> labels;           // per element, in [0, J]
  std::vector<double> distances;     // d(T, K)
  std::vector<Index> shell(int j) const;
};

/// Labels each element by its shell around element `center`: 0 if
/// d(T, K) <= d0, otherwise the j with d_{j-1} < d(T, K) <= d_j.
DyadicDecomposition dyadic_decomposition(const CurvedMesh& mesh, Index center, double stride_ratio);

/// Diameter of Omega_h from boundary samples.
double mesh_diameter(const CurvedMesh& mesh);

}  // namespace isofem

#pragma once

#include "isofem/core.hpp"
#include "isofem/geometry.hpp"
#include "isofem/mesh.hpp"
#include "isofem/quadrature.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace isofem {

/// Basis values and reference gradients tabulated at the points of a rule.
struct BasisTables {
  QuadratureRule<double> rule;
  Eigen::MatrixXd values;                                    // N x Q
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, kDim>> gradients;  // per point, N x 2

  BasisTables(const ReferenceElement<double>& ref, QuadratureRule<double> r);
  /// Tabulation at arbitrary reference points with unit weights.
  BasisTables(const ReferenceElement<double>& ref, const PointSet& points);
};

/// Lagrange P_k isoparametric space V_h on a curved mesh; dofs are the
/// global mesh nodes. Interior dofs span the homogeneous-Dirichlet subspace.
class FeSpace {
 public:
  explicit FeSpace(std::shared_ptr<const CurvedMesh> mesh);
  explicit FeSpace(CurvedMesh mesh) : FeSpace(std::make_shared<const CurvedMesh>(std::move(mesh))) {}

  const CurvedMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const CurvedMesh> mesh_ptr() const { return mesh_; }
  const ReferenceElement<double>& reference() const { return mesh_->reference(); }
  int degree() const { return mesh_->degree(); }

  Index n_dofs() const { return mesh_->n_nodes(); }
  const std::vector<Index>& interior_dofs() const { return interior_; }
  const std::vector<Index>& boundary_dofs() const { return boundary_; }
  /// Position of a dof in interior_dofs(), or -1 for boundary dofs.
  Index interior_index(Index dof) const { return interior_index_[dof]; }
  bool is_boundary_dof(Index dof) const { return mesh_->is_boundary_node(dof); }

  /// Boundary edges incident to a vertex node (empty if the vertex is interior).
  const std::vector<BoundaryEdge>& boundary_edges_at_vertex(Index vertex) const;

  /// Default quadrature degree 2k + 3.
  int default_quadrature_degree() const { return 2 * degree() + 3; }

  /// FNV-1a hash of degree, node coordinates and connectivity.
  std::uint64_t hash() const { return hash_; }
  std::string hash_string() const;

 private:
  std::shared_ptr<const CurvedMesh> mesh_;
  std::vector<Index> interior_;
  std::vector<Index> boundary_;
  std::vector<Index> interior_index_;
  std::vector<std::vector<BoundaryEdge>> vertex_boundary_edges_;
  std::uint64_t hash_ = 0;
};

/// Finite element function: one coefficient per global node. Holds a
/// non-owning pointer to its space.
class Field {
 public:
  Field(const FeSpace& space, Vector coefficients);
  explicit Field(const FeSpace& space) : Field(space, Vector::Zero(space.n_dofs())) {}

  const FeSpace& space() const { return *space_; }
  const Vector& coefficients() const { return coefficients_; }
  Vector& coefficients() { return coefficients_; }
  double operator[](Index a) const { return coefficients_(a); }

  /// Coefficients of element t in local node order.
  Vector element_coefficients(Index t) const;
  bool in_zero_boundary_space() const;

 private:
  const FeSpace* space_;
  Vector coefficients_;
};

using PointFunction = std::function<double(const Point&)>;

/// I_h: nodal interpolation.
Field interpolate(const FeSpace& space, const PointFunction& v);
/// Interpolation with boundary values dropped (result lies in the zero-trace subspace).
Field interpolate_zero_boundary(const FeSpace& space, const PointFunction& v);

struct FieldValue {
  double value = 0.0;
  Point gradient = Point::Zero();
};

/// Value and physical gradient of a field at reference point xhat of element t.
FieldValue eval_in_element(const Field& field, Index t, const Point& xhat);

/// Point evaluation with element location. Builds its locator once.
class FieldEvaluator {
 public:
  explicit FieldEvaluator(const FeSpace& space) : space_(&space), locator_(space.mesh()) {}
  /// Throws PointNotInMesh outside Omega_h.
  FieldValue operator()(const Field& field, const Point& x) const;
  const PointLocator& locator() const { return locator_; }

 private:
  const FeSpace* space_;
  PointLocator locator_;
};

/// One-shot evaluation; prefer FieldEvaluator for many points.
FieldValue field_eval(const Field& field, const Point& x);

struct ErrorNorms {
  double linf = 0.0;
  double l2 = 0.0;
  double h1_semi = 0.0;
};

/// Norms of exact - field over Omega_h. L-infinity is sampled on the
/// barycentric lattice of order 2k+3 of every element plus all nodes; L2 and
/// H1-seminorm use quadrature of degree 2k+3 unless `quadrature_degree` > 0.
ErrorNorms error_norms(const Field& field, const ScalarField2D& exact, int quadrature_degree = -1);

/// Measured ratio || grad^m (v - Idot v) ||_{L^p(T)} / (h_T^{1/p - m} ||v||_{L^p(S)})
/// for a boundary element T, S the boundary edges carrying T's boundary
/// nodes. m in {0, 1}; p = 2 or p = infinity (pass
/// std::numeric_limits<double>::infinity()). Returns 0 when the numerator
/// vanishes. Throws ElementNotOnBoundary if T has no boundary node.
double lemma31_ratio(const Field& field, Index element, int m, double p);

/// JSON dump {space_hash, coefficients}; numbers carry 17 significant digits.
void write_field_json(const Field& field, std::ostream& out);
/// Reads a dump; throws InvalidArgument if the hash does not match `space`.
Field read_field_json(const FeSpace& space, std::istream& in);

}  // namespace isofem

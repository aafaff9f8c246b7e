#pragma once

#include "isofem/fe_space.hpp"

#include <Eigen/Sparse>
#include <iosfwd>
#include <vector>

namespace isofem {

/// Compressed sparse row matrix.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

/// Stiffness matrix on all dofs, A[a][b] = (grad phi_b, grad phi_a) over Omega_h.
/// Quadrature degree defaults to 2k+3. Throws SingularJacobian if det J <= 0
/// at a quadrature point.
SparseMatrix assemble_stiffness(const FeSpace& space, int quadrature_degree = -1);

/// Load vector b[a] = (f, phi_a) over Omega_h.
Vector assemble_load(const FeSpace& space, const PointFunction& f, int quadrature_degree = -1);
inline Vector assemble_load(const FeSpace& space, const ScalarField2D& f, int quadrature_degree = -1) {
  return assemble_load(space, PointFunction(f.value), quadrature_degree);
}

/// System restricted to interior dofs. dofs[i] is the global dof of unknown i.
struct LinearSystem {
  const FeSpace* space = nullptr;
  SparseMatrix matrix;
  Vector rhs;
  std::vector<Index> dofs;

  Index size() const { return static_cast<Index>(dofs.size()); }
  /// Global vector with zeros on boundary dofs.
  Vector scatter(const Vector& reduced) const;
  Vector gather(const Vector& global) const;
};

/// Removes boundary rows and columns (homogeneous Dirichlet data). Throws
/// EmptyBoundary if the space has no boundary dof.
LinearSystem apply_dirichlet(const SparseMatrix& a, const Vector& b, const FeSpace& space);

struct SolveStats {
  int iterations = 0;
  double residual_norm = 0.0;  // ||b - A u||_2, recomputed at exit
  double rhs_norm = 0.0;
  /// CG energy functional 1/2 u'Au - b'u after each iterate, starting at u = 0.
  std::vector<double> energy;
  /// Step lengths and direction updates, from which Lanczos Ritz values of
  /// the preconditioned matrix are recovered.
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// Jacobi-preconditioned conjugate gradients from a zero start until
/// ||b - A u||_2 <= rel_tol ||b||_2. rel_tol must lie in [1e-14, 1e-6].
/// Throws NoConvergence after 20 sqrt(n) iterations and IndefiniteMatrix on a
/// non-positive curvature p'Ap.
Vector conjugate_gradient(const SparseMatrix& a, const Vector& b, double rel_tol = 1e-12,
                          SolveStats* stats = nullptr);

/// Solves the reduced system and scatters the result into a Field.
Field solve(const LinearSystem& system, double rel_tol = 1e-12, SolveStats* stats = nullptr);

/// Eigenvalues of the Lanczos tridiagonal matrix built from CG coefficients,
/// in increasing order.
Vector ritz_values(const SolveStats& stats);

/// Max over interior dofs a of |a_h(u, phi_a) - (f, phi_a)| at the given
/// quadrature degree.
double galerkin_residual(const Field& u, const PointFunction& f, int quadrature_degree);

/// Symmetric MatrixMarket coordinate dump (lower triangle, 1-based).
void write_matrix_market(const SparseMatrix& a, std::ostream& out);

}  // namespace isofem

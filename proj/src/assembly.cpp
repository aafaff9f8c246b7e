#include "isofem/assembly.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <ostream>

namespace isofem {

namespace {

int resolve_degree(const FeSpace& space, int quadrature_degree) {
  return quadrature_degree > 0 ? quadrature_degree : space.default_quadrature_degree();
}

}  // namespace

SparseMatrix assemble_stiffness(const FeSpace& space, int quadrature_degree) {
  const CurvedMesh& mesh = space.mesh();
  const BasisTables tab(space.reference(), build_quadrature<double>(resolve_degree(space, quadrature_degree)));
  const int n = space.reference().size();

  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.n_elements()) * n * n);
  Eigen::MatrixXd ke(n, n);
  Eigen::Matrix<double, Eigen::Dynamic, kDim> phys(n, kDim);
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    const auto g = mesh.geom_nodes(t);
    ke.setZero();
    for (int q = 0; q < tab.rule.size(); ++q) {
      const Jacobian jac = g * tab.gradients[q];
      const double det = jac.determinant();
      if (!(det > 0)) {
        throw Error(ErrorCode::SingularJacobian, "det J <= 0 in element " + std::to_string(t));
      }
      phys.noalias() = tab.gradients[q] * jac.inverse();
      ke.noalias() += (tab.rule.weights(q) * det) * phys * phys.transpose();
    }
    const auto nodes = mesh.element_nodes(t);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) triplets.emplace_back(nodes[i], nodes[j], ke(i, j));
  }
  SparseMatrix a(space.n_dofs(), space.n_dofs());
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

Vector assemble_load(const FeSpace& space, const PointFunction& f, int quadrature_degree) {
  const CurvedMesh& mesh = space.mesh();
  const BasisTables tab(space.reference(), build_quadrature<double>(resolve_degree(space, quadrature_degree)));
  Vector b = Vector::Zero(space.n_dofs());
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    const auto g = mesh.geom_nodes(t);
    const auto nodes = mesh.element_nodes(t);
    for (int q = 0; q < tab.rule.size(); ++q) {
      const double det = (g * tab.gradients[q]).determinant();
      const double fw = f(g * tab.values.col(q)) * tab.rule.weights(q) * std::abs(det);
      for (std::size_t i = 0; i < nodes.size(); ++i) b(nodes[i]) += fw * tab.values(static_cast<Index>(i), q);
    }
  }
  return b;
}

Vector LinearSystem::scatter(const Vector& reduced) const {
  Vector out = Vector::Zero(space->n_dofs());
  for (Index i = 0; i < size(); ++i) out(dofs[i]) = reduced(i);
  return out;
}

Vector LinearSystem::gather(const Vector& global) const {
  Vector out(size());
  for (Index i = 0; i < size(); ++i) out(i) = global(dofs[i]);
  return out;
}

LinearSystem apply_dirichlet(const SparseMatrix& a, const Vector& b, const FeSpace& space) {
  if (space.boundary_dofs().empty()) throw Error(ErrorCode::EmptyBoundary, "space has no boundary dofs");
  if (a.rows() != space.n_dofs() || b.size() != space.n_dofs()) {
    throw Error(ErrorCode::InvalidArgument, "system size does not match the space");
  }
  LinearSystem sys;
  sys.space = &space;
  sys.dofs = space.interior_dofs();
  const Index n = sys.size();
  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros()));
  for (Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(a, sys.dofs[i]); it; ++it) {
      const Index j = space.interior_index(it.col());
      if (j >= 0) triplets.emplace_back(i, j, it.value());
    }
  }
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.matrix.makeCompressed();
  sys.rhs = sys.gather(b);
  return sys;
}

Vector conjugate_gradient(const SparseMatrix& a, const Vector& b, double rel_tol, SolveStats* stats) {
  if (!(rel_tol >= 1e-14 && rel_tol <= 1e-6)) {
    throw Error(ErrorCode::InvalidArgument, "rel_tol must lie in [1e-14, 1e-6]");
  }
  const Index n = b.size();
  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  st = SolveStats{};
  st.rhs_norm = b.norm();

  Vector x = Vector::Zero(n);
  if (st.rhs_norm == 0.0) return x;

  const Vector inv_diag = a.diagonal().cwiseInverse();
  const int max_iter = static_cast<int>(std::ceil(20.0 * std::sqrt(static_cast<double>(n))));
  const double target = rel_tol * st.rhs_norm;

  Vector r = b;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  Vector ap(n);
  double rz = r.dot(z);
  double energy = 0.0;
  st.energy.push_back(energy);
  double rnorm = st.rhs_norm;
  int it = 0;
  while (rnorm > target) {
    if (it >= max_iter) {
      throw Error(ErrorCode::NoConvergence, "CG did not converge in " + std::to_string(max_iter) +
                                                " iterations (relative residual " +
                                                std::to_string(rnorm / st.rhs_norm) + ")");
    }
    ap.noalias() = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0)) throw Error(ErrorCode::IndefiniteMatrix, "non-positive curvature p'Ap in CG");
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    // E(x + alpha p) = E(x) - alpha r'z + alpha^2 p'Ap / 2 = E(x) - alpha r'z / 2
    energy -= 0.5 * alpha * rz;
    st.energy.push_back(energy);
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    st.alpha.push_back(alpha);
    st.beta.push_back(beta);
    rz = rz_new;
    p = z + beta * p;
    rnorm = r.norm();
    ++it;
  }
  st.iterations = it;
  st.residual_norm = (b - a * x).norm();
  return x;
}

Field solve(const LinearSystem& system, double rel_tol, SolveStats* stats) {
  return Field(*system.space, system.scatter(conjugate_gradient(system.matrix, system.rhs, rel_tol, stats)));
}

Vector ritz_values(const SolveStats& stats) {
  const int m = static_cast<int>(stats.alpha.size());
  if (m == 0) return Vector();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    t(j, j) = 1.0 / stats.alpha[j] + (j > 0 ? stats.beta[j - 1] / stats.alpha[j - 1] : 0.0);
    if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = std::sqrt(stats.beta[j]) / stats.alpha[j];
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t, Eigen::EigenvaluesOnly).eigenvalues();
}

double galerkin_residual(const Field& u, const PointFunction& f, int quadrature_degree) {
  const FeSpace& space = u.space();
  const Vector r = assemble_stiffness(space, quadrature_degree) * u.coefficients() -
                   assemble_load(space, f, quadrature_degree);
  double worst = 0.0;
  for (Index a : space.interior_dofs()) worst = std::max(worst, std::abs(r(a)));
  return worst;
}

void write_matrix_market(const SparseMatrix& a, std::ostream& out) {
  Index nnz = 0;
  for (Index i = 0; i < a.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
      if (it.col() <= i) ++nnz;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n';
  for (Index i = 0; i < a.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
      if (it.col() <= i) out << i + 1 << ' ' << it.col() + 1 << ' ' << format_g17(it.value()) << '\n';
}

}  // namespace isofem

#include "isofem/greens.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <ostream>

namespace isofem {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMinBarycentricForDelta = 0.02;
constexpr double kMaxDualCondition = 1e10;
constexpr double kFiniteDifferenceStep = 1e-6;
constexpr double kNearFieldTolerance = 1e-6;

// Geometry of one element evaluated without per-call allocation of node lists.
struct ElementGeometry {
  const ReferenceElement<double>* ref;
  Eigen::Matrix<double, kDim, Eigen::Dynamic> nodes;

  Point map(const Point& xhat, double& det) const {
    det = (nodes * ref->gradients(xhat)).determinant();
    return nodes * ref->values(xhat);
  }
};

}  // namespace

Bump Bump::standard() {
  const double inradius = 1.0 - std::sqrt(0.5);
  return Bump{Point(inradius, inradius), 0.6 * inradius};
}

double Bump::operator()(const Point& xhat) const {
  const double r2 = radius * radius;
  const double d2 = (xhat - center).squaredNorm();
  if (d2 >= r2) return 0.0;
  return std::exp(-r2 / (r2 - d2));
}

// ---------------------------------------------------------------------------
// RegularizedDelta

double RegularizedDelta::at_reference(const Point& xhat) const {
  const double w = bump(xhat);
  if (w == 0.0) return 0.0;
  return w * coefficients.dot(space->reference().values(xhat));
}

double RegularizedDelta::operator()(const Point& x) const {
  Point xhat;
  if (!try_invert_element_map(space->mesh(), element, x, xhat)) return 0.0;
  if (min_barycentric(xhat) < 0.0) return 0.0;
  return at_reference(xhat);
}

double RegularizedDelta::pair(const Field& v) const {
  const Vector c = v.element_coefficients(element);
  const auto& ref = space->reference();
  double s = 0.0;
  for (Index q = 0; q < weights.size(); ++q) s += weights(q) * c.dot(ref.values(reference_points.col(q)));
  return s;
}

RegularizedDelta RegularizedDelta::scaled(double s) const {
  RegularizedDelta out = *this;
  out.coefficients *= s;
  out.weights *= s;
  return out;
}

double RegularizedDelta::support_clearance() const {
  // Distance from the image of the bump circle to the image of the element boundary.
  const CurvedMesh& mesh = space->mesh();
  const int n = 256;
  PointSet circle(kDim, n), edge(kDim, 3 * n);
  for (int i = 0; i < n; ++i) {
    const double phi = kTwoPi * i / n;
    circle.col(i) = element_map(mesh, element, bump.center + bump.radius * Point(std::cos(phi), std::sin(phi))).x;
  }
  const Point v[3] = {Point(0, 0), Point(1, 0), Point(0, 1)};
  for (int e = 0; e < 3; ++e)
    for (int i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) / n;
      edge.col(e * n + i) = element_map(mesh, element, (1 - s) * v[e] + s * v[(e + 1) % 3]).x;
    }
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < circle.cols(); ++i) best = std::min(best, (edge.colwise() - circle.col(i)).colwise().norm().minCoeff());
  return best;
}

RegularizedDelta build_regularized_delta(const FeSpace& space, Index element, const Point& z, const BumpRuleSize& size) {
  if (element < 0 || element >= space.mesh().n_elements()) {
    throw Error(ErrorCode::OutOfRange, "element index out of range");
  }
  RegularizedDelta eta;
  eta.space = &space;
  eta.element = element;
  eta.z = z;
  eta.bump = Bump::standard();
  if (!try_invert_element_map(space.mesh(), element, z, eta.zhat) ||
      min_barycentric(eta.zhat) < kMinBarycentricForDelta) {
    throw Error(ErrorCode::NotInElement, "z must lie inside the element, away from its boundary");
  }

  const auto& ref = space.reference();
  const ElementGeometry geo{&ref, space.mesh().geom_nodes(element)};
  const auto rule = build_disk_rule<double>(eta.bump.center, eta.bump.radius, size.radial, size.angular);
  const int n = ref.size();
  const Index nq = rule.size();

  Eigen::MatrixXd phi(n, nq);
  Vector base_weight(nq);
  eta.reference_points = rule.points;
  eta.physical_points.resize(kDim, nq);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Index q = 0; q < nq; ++q) {
    double det = 0.0;
    eta.physical_points.col(q) = geo.map(rule.point(q), det);
    phi.col(q) = ref.values(rule.point(q));
    base_weight(q) = rule.weights(q) * std::abs(det) * eta.bump(rule.point(q));
    m.noalias() += base_weight(q) * phi.col(q) * phi.col(q).transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  eta.condition_number = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(eta.condition_number <= kMaxDualCondition)) {
    throw Error(ErrorCode::IllConditionedDualBasis,
                "dual basis mass matrix condition number " + std::to_string(eta.condition_number));
  }
  eta.coefficients = m.ldlt().solve(ref.values(eta.zhat));
  eta.weights = base_weight.cwiseProduct(phi.transpose() * eta.coefficients);
  return eta;
}

Vector delta_load(const RegularizedDelta& eta) {
  const auto& ref = eta.space->reference();
  Vector local = Vector::Zero(ref.size());
  for (Index q = 0; q < eta.weights.size(); ++q) local += eta.weights(q) * ref.values(eta.reference_points.col(q));
  Vector b = Vector::Zero(eta.space->n_dofs());
  const auto nodes = eta.space->mesh().element_nodes(eta.element);
  for (std::size_t i = 0; i < nodes.size(); ++i) b(nodes[i]) += local(static_cast<Index>(i));
  return b;
}

Field solve_discrete_green(const LinearSystem& system, const RegularizedDelta& eta, double rel_tol, SolveStats* stats) {
  if (system.space != eta.space) throw Error(ErrorCode::InvalidArgument, "delta and system belong to different spaces");
  const Vector b = system.gather(delta_load(eta));
  return Field(*system.space, system.scatter(conjugate_gradient(system.matrix, b, rel_tol, stats)));
}

Field solve_discrete_green(const FeSpace& space, const RegularizedDelta& eta, double rel_tol, SolveStats* stats) {
  const SparseMatrix a = assemble_stiffness(space);
  const LinearSystem system = apply_dirichlet(a, Vector::Zero(space.n_dofs()), space);
  return solve_discrete_green(system, eta, rel_tol, stats);
}

// ---------------------------------------------------------------------------
// Exact kernel

double exact_disk_green(const Point& x, const Point& y, double radius) {
  const Point xs = x / radius, ys = y / radius;
  const double d = (xs - ys).norm();
  if (d * radius < 1e-14) throw Error(ErrorCode::SingularArgument, "Green kernel evaluated on its diagonal");
  // |y| |x - y/|y|^2| written without dividing by |y|, so y = 0 needs no special case.
  const double image = std::sqrt(std::max(0.0, xs.squaredNorm() * ys.squaredNorm() - 2.0 * xs.dot(ys) + 1.0));
  return -(std::log(d) - std::log(image)) / kTwoPi;
}

ExactRegularizedGreen::ExactRegularizedGreen(const RegularizedDelta& eta, double disk_radius)
    : eta_(&eta), radius_(disk_radius) {
  bump_center_phys_ = element_map(eta.space->mesh(), eta.element, eta.bump.center).x;
  near_distance_ = 2.0 * eta.space->mesh().element_h(eta.element);
}

double ExactRegularizedGreen::near_field(const Point& x, const Point& xhat, int radial, int angular) const {
  const RegularizedDelta& eta = *eta_;
  const ElementGeometry geo{&eta.space->reference(), eta.space->mesh().geom_nodes(eta.element)};
  const GaussLegendre<double> gr(radial);
  const Point v = xhat - eta.bump.center;
  const double r = eta.bump.radius;
  const double dist = v.norm();

  auto integrand = [&](const Point& yhat) {
    const double e = eta.at_reference(yhat);
    if (e == 0.0) return 0.0;
    double det = 0.0;
    const Point y = geo.map(yhat, det);
    return exact_disk_green(x, y, radius_) * e * std::abs(det);
  };

  double sum = 0.0;
  if (dist < r) {
    // Rays from xhat to the bump circle, rho = rho_b u^2 to smooth the log singularity.
    for (int j = 0; j < angular; ++j) {
      const double phi = kTwoPi * (j + 0.5) / angular;
      const Point dir(std::cos(phi), std::sin(phi));
      const double b = v.dot(dir);
      const double rho_b = -b + std::sqrt(b * b - dist * dist + r * r);
      for (int i = 0; i < radial; ++i) {
        const double u = gr.nodes(i);
        const double rho = rho_b * u * u;
        sum += (kTwoPi / angular) * gr.weights(i) * 2.0 * rho_b * u * rho * integrand(xhat + rho * dir);
      }
    }
  } else {
    // xhat outside the support: rays within the tangent cone cross the disk on [rho1, rho2].
    const GaussLegendre<double> ga(angular);
    const double phi0 = std::atan2(-v.y(), -v.x());
    const double alpha = std::asin(std::min(1.0, r / dist));
    for (int j = 0; j < angular; ++j) {
      const double phi = phi0 - alpha + 2.0 * alpha * ga.nodes(j);
      const Point dir(std::cos(phi), std::sin(phi));
      const double b = v.dot(dir);
      const double disc = b * b - dist * dist + r * r;
      if (disc <= 0.0) continue;
      const double rho1 = -b - std::sqrt(disc), rho2 = -b + std::sqrt(disc);
      for (int i = 0; i < radial; ++i) {
        const double rho = rho1 + (rho2 - rho1) * gr.nodes(i);
        sum += 2.0 * alpha * ga.weights(j) * (rho2 - rho1) * gr.weights(i) * rho * integrand(xhat + rho * dir);
      }
    }
  }
  return sum;
}

GreenValue ExactRegularizedGreen::operator()(const Point& x) const {
  const RegularizedDelta& eta = *eta_;
  GreenValue out;
  Point xhat;
  const bool near = (x - bump_center_phys_).norm() < near_distance_;
  if (near && try_invert_element_map(eta.space->mesh(), eta.element, x, xhat)) {
    const double coarse = near_field(x, xhat, 48, 96);
    out.value = near_field(x, xhat, 64, 128);
    out.accuracy_loss = std::abs(out.value - coarse) > kNearFieldTolerance * std::max(1.0, std::abs(out.value));
    return out;
  }
  for (Index q = 0; q < eta.weights.size(); ++q) {
    out.value += eta.weights(q) * exact_disk_green(x, eta.physical_points.col(q), radius_);
  }
  out.accuracy_loss = near;  // near-field point whose preimage could not be computed
  return out;
}

ExactRegularizedGreen::Gradient ExactRegularizedGreen::gradient(const Point& x) const {
  Gradient out;
  auto central = [&](double s) {
    Point g;
    for (int d = 0; d < kDim; ++d) {
      Point e = Point::Zero();
      e(d) = s;
      const GreenValue plus = (*this)(x + e), minus = (*this)(x - e);
      out.accuracy_loss = out.accuracy_loss || plus.accuracy_loss || minus.accuracy_loss;
      g(d) = (plus.value - minus.value) / (2.0 * s);
    }
    return g;
  };
  out.value = central(kFiniteDifferenceStep);
  const Point half = central(0.5 * kFiniteDifferenceStep);
  if ((out.value - half).norm() > 1e-4 * std::max(1.0, out.value.norm())) out.accuracy_loss = true;
  return out;
}

GreenValue exact_regularized_green(const RegularizedDelta& eta, const Point& x, double disk_radius) {
  return ExactRegularizedGreen(eta, disk_radius)(x);
}

// ---------------------------------------------------------------------------
// Diagnostics

double GreenDiagnostics::shell_l1_sum() const {
  double s = 0.0;
  for (const auto& row : shells) s += row.l1_grad;
  return s;
}

Index deepest_element_containing(const CurvedMesh& mesh, const Point& z) {
  Index best = -1;
  double best_depth = -std::numeric_limits<double>::infinity();
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    if ((mesh.affine_map(t, Point(1.0 / 3, 1.0 / 3)) - z).norm() > 2.0 * mesh.element_h(t)) continue;
    Point xhat;
    if (!try_invert_element_map(mesh, t, z, xhat)) continue;
    const double depth = min_barycentric(xhat);
    if (depth > best_depth) {
      best_depth = depth;
      best = t;
    }
  }
  if (best < 0 || best_depth < -1e-10) throw Error(ErrorCode::PointNotInMesh, "z is not inside the mesh");
  return best;
}

GreenDiagnostics green_diagnostics(const FeSpace& space, const Domain& domain, const Point& z, double stride_ratio,
                                   double rel_tol) {
  if (domain.kind() != Domain::Kind::Disk) {
    throw Error(ErrorCode::InvalidArgument, "Green diagnostics need the closed-form disk kernel");
  }
  const CurvedMesh& mesh = space.mesh();
  GreenDiagnostics diag;
  diag.z = z;
  diag.stride_ratio = stride_ratio;
  diag.h = mesh.h();
  diag.element = deepest_element_containing(mesh, z);

  const RegularizedDelta eta = build_regularized_delta(space, diag.element, z);
  SolveStats stats;
  const Field gh = solve_discrete_green(space, eta, rel_tol, &stats);
  diag.solve_iterations = stats.iterations;
  diag.g_h_at_z = eval_in_element(gh, diag.element, eta.zhat).value;

  const DyadicDecomposition dec = dyadic_decomposition(mesh, diag.element, stride_ratio);
  diag.scales = dec.scales;
  diag.shells.resize(dec.scales.levels + 1);
  for (int j = 0; j <= dec.scales.levels; ++j) {
    diag.shells[j].j = j;
    diag.shells[j].d_j = dec.scales.scale(j);
  }

  const ExactRegularizedGreen exact(eta, domain.radius(0.0));
  const BasisTables tab(space.reference(), build_quadrature<double>(space.default_quadrature_degree()));
  double l1 = 0.0, l2g = 0.0, l2 = 0.0;
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    const auto g = mesh.geom_nodes(t);
    const Vector c = gh.element_coefficients(t);
    double el_l1 = 0.0, el_l2g = 0.0, el_l2 = 0.0, el_area = 0.0;
    for (int q = 0; q < tab.rule.size(); ++q) {
      const Jacobian jac = g * tab.gradients[q];
      const double w = tab.rule.weights(q) * std::abs(jac.determinant());
      const Point x = g * tab.values.col(q);
      const GreenValue gv = exact(x);
      const auto grad = exact.gradient(x);
      if (gv.accuracy_loss || grad.accuracy_loss) ++diag.accuracy_flags;
      const double e = gv.value - c.dot(tab.values.col(q));
      const Point ge = grad.value - jac.transpose().partialPivLu().solve(tab.gradients[q].transpose() * c);
      el_l1 += w * ge.norm();
      el_l2g += w * ge.squaredNorm();
      el_l2 += w * e * e;
      el_area += w;
    }
    GreenShellRow& row = diag.shells[dec.labels[t]];
    row.l1_grad += el_l1;
    row.l2_grad += el_l2g;  // squared until finalized
    row.l2 += el_l2;
    row.measure += el_area;
    ++row.n_elements;
    l1 += el_l1;
    l2g += el_l2g;
    l2 += el_l2;
  }
  diag.l1_grad_total = l1;
  diag.l2_grad_total = std::sqrt(l2g);
  diag.l2_total = std::sqrt(l2);
  constexpr double half_dim = kDim / 2.0;
  for (auto& row : diag.shells) {
    row.l2_grad = std::sqrt(row.l2_grad);
    row.l2 = std::sqrt(row.l2);
    row.weighted_h1 = std::pow(row.d_j, half_dim) * row.l2_grad;
    row.weighted_l2 = std::pow(row.d_j, half_dim - 1.0) * row.l2;
    diag.weighted_h1_sum += row.weighted_h1;
    diag.weighted_l2_sum += row.weighted_l2;
  }
  return diag;
}

void write_green_csv(const GreenDiagnostics& diag, std::ostream& out) {
  out << "j,d_j,l2_grad_shell,weighted_h1_shell,l2_shell,weighted_l2_shell\n";
  for (const auto& row : diag.shells) {
    out << row.j << ',' << format_g17(row.d_j) << ',' << format_g17(row.l2_grad) << ','
        << format_g17(row.weighted_h1) << ',' << format_g17(row.l2) << ',' << format_g17(row.weighted_l2) << '\n';
  }
  out << "total,," << format_g17(diag.l2_grad_total) << ',' << format_g17(diag.weighted_h1_sum) << ','
      << format_g17(diag.l2_total) << ',' << format_g17(diag.weighted_l2_sum) << '\n';
}

}  // namespace isofem

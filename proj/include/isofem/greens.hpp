#pragma once

#include "isofem/assembly.hpp"

#include <iosfwd>
#include <vector>

namespace isofem {

/// Cut-off bump on the reference triangle: omega(x) = exp(-r^2 / (r^2 - |x - c|^2))
/// inside the disk of radius r about c, zero outside.
struct Bump {
  Point center;
  double radius = 0.0;

  /// Centered at the incenter of the reference triangle with 0.6 times its inradius.
  static Bump standard();
  double operator()(const Point& xhat) const;
};

/// Resolution of the polar rule used for integrals against the bump.
struct BumpRuleSize {
  int radial = 60;
  int angular = 96;
};

/// Regularized delta eta supported in element K with (eta, v_h)_K = v_h(z)
/// for every v_h whose pullback to the reference element is in P_k.
/// On K, eta(F(xhat)) = omega(xhat) * sum_l c_l phi_l(xhat) with
/// M c = phi(zhat), M_jl = int omega phi_j phi_l det J over the reference triangle.
struct RegularizedDelta {
  const FeSpace* space = nullptr;
  Index element = -1;
  Point z;
  Point zhat;
  Bump bump;
  Vector coefficients;        // c
  double condition_number = 0.0;

  /// Rule over the bump disk: reference points, physical points, and
  /// weights w_q * det J * eta(y_q), so (eta, v) = sum_q weights(q) v(y_q).
  PointSet reference_points;
  PointSet physical_points;
  Vector weights;

  /// eta at a reference point of K.
  double at_reference(const Point& xhat) const;
  /// eta at a physical point; zero outside K.
  double operator()(const Point& x) const;
  /// (eta, v_h) for a field of the same space.
  double pair(const Field& v) const;
  /// Copy with eta multiplied by s.
  RegularizedDelta scaled(double s) const;
  /// Physical distance from the bump support to the boundary of K, sampled.
  double support_clearance() const;
};

/// Throws NotInElement unless zhat is at barycentric distance >= 0.02 from the
/// reference boundary, and IllConditionedDualBasis if cond(M) > 1e10.
RegularizedDelta build_regularized_delta(const FeSpace& space, Index element, const Point& z,
                                         const BumpRuleSize& size = {});

/// Global load vector (eta, phi_a).
Vector delta_load(const RegularizedDelta& eta);

/// g_h in the zero-trace space with a_h(v_h, g_h) = (v_h, eta) for all v_h.
/// `system` supplies the reduced stiffness matrix of eta's space; its rhs is ignored.
Field solve_discrete_green(const LinearSystem& system, const RegularizedDelta& eta, double rel_tol = 1e-12,
                           SolveStats* stats = nullptr);
Field solve_discrete_green(const FeSpace& space, const RegularizedDelta& eta, double rel_tol = 1e-12,
                           SolveStats* stats = nullptr);

/// Dirichlet Green function of the disk of radius R about the origin.
/// Throws SingularArgument if |x - y| < 1e-14.
double exact_disk_green(const Point& x, const Point& y, double radius = 1.0);

struct GreenValue {
  double value = 0.0;
  bool accuracy_loss = false;  // near-field refinement levels disagree by more than 1e-6
};

/// g(x) = int_K G(x, y) eta(y) dy on a disk domain. Points within h_K of K
/// use a polar rule centred at the preimage of x, evaluated at two resolutions.
class ExactRegularizedGreen {
 public:
  ExactRegularizedGreen(const RegularizedDelta& eta, double disk_radius = 1.0);

  GreenValue operator()(const Point& x) const;

  struct Gradient {
    Point value = Point::Zero();
    bool accuracy_loss = false;  // step-halving or near-field check failed
  };
  /// Central differences at step 1e-6, checked against step 5e-7.
  Gradient gradient(const Point& x) const;

 private:
  double near_field(const Point& x, const Point& xhat, int radial, int angular) const;

  const RegularizedDelta* eta_;
  double radius_;
  Point bump_center_phys_;
  double near_distance_;
};

GreenValue exact_regularized_green(const RegularizedDelta& eta, const Point& x, double disk_radius = 1.0);

struct GreenShellRow {
  int j = 0;
  double d_j = 0.0;
  double l2_grad = 0.0;       // ||grad(g - g_h)||_{L2(shell)}
  double weighted_h1 = 0.0;   // d_j^{N/2} l2_grad
  double l2 = 0.0;            // ||g - g_h||_{L2(shell)}
  double weighted_l2 = 0.0;   // d_j^{N/2 - 1} l2
  double l1_grad = 0.0;       // ||grad(g - g_h)||_{L1(shell)}
  double measure = 0.0;
  Index n_elements = 0;
};

struct GreenDiagnostics {
  Index element = -1;
  Point z;
  double stride_ratio = 0.0;
  double h = 0.0;
  DyadicScales scales;
  std::vector<GreenShellRow> shells;   // j = 0..J
  double l1_grad_total = 0.0;          // computed over the whole mesh, independent of the shells
  double l2_grad_total = 0.0;
  double l2_total = 0.0;
  double weighted_h1_sum = 0.0;
  double weighted_l2_sum = 0.0;
  double g_h_at_z = 0.0;
  int solve_iterations = 0;
  Index accuracy_flags = 0;            // oracle evaluations that raised accuracy_loss
  double shell_l1_sum() const;
};

/// Element whose reference preimage of z has the largest smallest
/// barycentric coordinate. Throws PointNotInMesh.
Index deepest_element_containing(const CurvedMesh& mesh, const Point& z);

/// Shell table of g - g_h for the regularized Green function of the element
/// containing z. The domain must be a disk centred at the origin.
GreenDiagnostics green_diagnostics(const FeSpace& space, const Domain& domain, const Point& z, double stride_ratio,
                                   double rel_tol = 1e-12);

/// CSV with header j,d_j,l2_grad_shell,weighted_h1_shell,l2_shell,weighted_l2_shell
/// and a totals row.
void write_green_csv(const GreenDiagnostics& diag, std::ostream& out);

}  // namespace isofem

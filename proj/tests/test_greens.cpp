#include "isofem/greens.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

using namespace isofem;

namespace {

constexpr double kPi = std::numbers::pi;
const Point kZ(0.31, 0.17);

std::unique_ptr<FeSpace> disk_space(double h, int k) {
  const Domain disk = Domain::disk(1.0);
  return std::make_unique<FeSpace>(curve_mesh(triangulate(disk, h), disk, k));
}

}  // namespace

TEST_CASE("regularized delta: unit mass and reproduction of random P_k pullbacks") {
  for (int k : {1, 2, 3}) {
    const auto space = disk_space(0.15, k);
    const Index K = deepest_element_containing(space->mesh(), kZ);
    const RegularizedDelta eta = build_regularized_delta(*space, K, kZ);
    const auto& ref = space->reference();
    CHECK((element_map(space->mesh(), K, eta.zhat).x - kZ).norm() <= 1e-12);

    const test::OraclePairing oracle(eta);
    CHECK(std::abs(oracle([](const Point&) { return 1.0; }) - 1.0) <= 1e-9);
    CHECK(std::abs(eta.pair(Field(*space, Vector::Ones(space->n_dofs()))) - 1.0) <= 1e-9);

    for (int trial = 0; trial < 50; ++trial) {
      Vector c(ref.size());
      for (int i = 0; i < ref.size(); ++i) c(i) = test::uniform(-1, 1);
      const auto vhat = [&](const Point& xhat) { return c.dot(ref.values(xhat)); };
      double sup = 0.0;
      const auto lattice = barycentric_lattice<double>(4 * k);
      for (Index q = 0; q < lattice.cols(); ++q) sup = std::max(sup, std::abs(vhat(lattice.col(q))));
      CHECK(std::abs(oracle(vhat) - vhat(eta.zhat)) <= 1e-9 * sup);
    }
  }
}

TEST_CASE("regularized delta: a finer bump rule changes nothing") {
  const auto space = disk_space(0.15, 2);
  const Index K = deepest_element_containing(space->mesh(), kZ);
  const RegularizedDelta a = build_regularized_delta(*space, K, kZ);
  const RegularizedDelta b = build_regularized_delta(*space, K, kZ, BumpRuleSize{80, 128});
  for (int i = 0; i < 10; ++i) {
    Vector c(space->n_dofs());
    for (Index n = 0; n < c.size(); ++n) c(n) = test::uniform(-1, 1);
    const Field v(*space, c);
    CHECK(std::abs(a.pair(v) - b.pair(v)) <= 1e-10 * c.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("regularized delta: scaling, support clearance, errors") {
  // The bound on sup |eta| h_K^2 holds uniformly in zhat. The physical z sits
  // at a different zhat on every level, so the scaling is measured with zhat
  // held fixed and z = F_K(zhat).
  const Point zhat(0.3, 0.25);
  std::vector<double> scaled_sup, clearance;
  for (double h : {0.2, 0.1, 0.05}) {
    const auto space = disk_space(h, 2);
    const Index K = deepest_element_containing(space->mesh(), kZ);
    const RegularizedDelta eta = build_regularized_delta(*space, K, element_map(space->mesh(), K, zhat).x);
    const double hk = space->mesh().element_h(K);
    double sup = 0.0;
    const auto lattice = barycentric_lattice<double>(40);
    for (Index q = 0; q < lattice.cols(); ++q) sup = std::max(sup, std::abs(eta.at_reference(lattice.col(q))));
    scaled_sup.push_back(sup * hk * hk);
    clearance.push_back(eta.support_clearance() / hk);
    CHECK(eta.condition_number < 1e10);
    CHECK(eta(kZ + Point(3 * hk, 0)) == 0.0);
  }
  for (std::size_t i = 0; i < scaled_sup.size(); ++i) {
    CHECK(clearance[i] >= 0.05);
    CHECK(scaled_sup[i] / scaled_sup[0] <= 2.0);
    CHECK(scaled_sup[0] / scaled_sup[i] <= 2.0);
  }

  const auto space = disk_space(0.2, 2);
  const Index K = deepest_element_containing(space->mesh(), kZ);
  const Point vertex = space->mesh().node(space->mesh().global_node(K, 0));
  CHECK_THROWS_CODE(build_regularized_delta(*space, K, vertex), ErrorCode::NotInElement);
  CHECK_THROWS_CODE(build_regularized_delta(*space, K, Point(-0.9, 0.0)), ErrorCode::NotInElement);
  CHECK_THROWS_CODE(build_regularized_delta(*space, K, kZ, BumpRuleSize{1, 1}), ErrorCode::IllConditionedDualBasis);
}

TEST_CASE("discrete Green function: reproduction, linearity, positivity, bridge") {
  const Domain disk = Domain::disk(1.0);
  const auto space = disk_space(0.15, 2);
  const Index K = deepest_element_containing(space->mesh(), kZ);
  const RegularizedDelta eta = build_regularized_delta(*space, K, kZ);
  const SparseMatrix a = assemble_stiffness(*space);
  const LinearSystem sys = apply_dirichlet(a, Vector::Zero(space->n_dofs()), *space);
  const Field g = solve_discrete_green(sys, eta);
  CHECK(g.in_zero_boundary_space());

  const FieldEvaluator eval(*space);
  for (int i = 0; i < 20; ++i) {
    Vector w = Vector::Zero(space->n_dofs());
    for (Index d : space->interior_dofs()) w(d) = test::uniform(-1, 1);
    const Field wf(*space, w);
    CHECK(std::abs(w.dot(a * g.coefficients()) - eval(wf, kZ).value) <= 1e-8);
  }

  const Field g2 = solve_discrete_green(sys, eta.scaled(2.0));
  CHECK((g2.coefficients() - 2.0 * g.coefficients()).norm() <= 1e-12 * g2.coefficients().norm());
  CHECK(eval(g, kZ).value > 0.0);

  // u_h(z) against (u_h, eta) for the Poisson solution
  const ManufacturedProblem mp = manufactured_problem(disk);
  const Field u = solve(apply_dirichlet(a, assemble_load(*space, mp.forcing), *space));
  CHECK(std::abs(eval(u, kZ).value - eta.pair(u)) <= 1e-8);
  CHECK(std::abs(eval(u, kZ).value - u.coefficients().dot(delta_load(eta))) <= 1e-8);
}

TEST_CASE("disk Green kernel") {
  for (int i = 0; i < 100; ++i) {
    const double th = test::uniform(0, 2 * kPi), r = std::sqrt(test::uniform(0, 0.95)), ph = test::uniform(0, 2 * kPi);
    const Point y(r * std::cos(ph), r * std::sin(ph)), x(std::cos(th), std::sin(th));
    CHECK(std::abs(exact_disk_green(x, y)) <= 1e-12);
    const double s = std::sqrt(test::uniform(0, 0.95)), ps = test::uniform(0, 2 * kPi);
    const Point w(s * std::cos(ps), s * std::sin(ps));
    CHECK(std::abs(exact_disk_green(w, y) - exact_disk_green(y, w)) <= 1e-12);
  }
  CHECK(std::abs(exact_disk_green(Point(0.3, 0.4), Point(0, 0)) + std::log(0.5) / (2 * kPi)) <= 1e-14);
  const double step = 1e-4;
  for (int i = 0; i < 50; ++i) {
    const Point y(test::uniform(-0.5, 0.5), test::uniform(-0.5, 0.5));
    Point x;
    do x = Point(test::uniform(-0.8, 0.8), test::uniform(-0.8, 0.8));
    while ((x - y).norm() < 0.3 || x.norm() > 0.85);
    const double lap = (exact_disk_green(x + Point(step, 0), y) + exact_disk_green(x - Point(step, 0), y) +
                        exact_disk_green(x + Point(0, step), y) + exact_disk_green(x - Point(0, step), y) -
                        4 * exact_disk_green(x, y)) /
                       (step * step);
    CHECK(std::abs(lap) <= 1e-4);
  }
  CHECK_THROWS_CODE(exact_disk_green(Point(0.2, 0.1), Point(0.2, 0.1)), ErrorCode::SingularArgument);
}

TEST_CASE("exact regularized Green function") {
  const auto space = disk_space(0.1, 2);
  const Index K = deepest_element_containing(space->mesh(), kZ);
  const RegularizedDelta eta = build_regularized_delta(*space, K, kZ);
  const ExactRegularizedGreen g(eta);
  const double hk = space->mesh().element_h(K);

  for (int i = 0; i < 20; ++i) {
    const double th = test::uniform(0, 2 * kPi);
    const GreenValue v = g(Point(std::cos(th), std::sin(th)));
    CHECK(std::abs(v.value) <= 1e-8);
  }
  int far = 0;
  while (far < 30) {
    const Point x(test::uniform(-0.85, 0.85), test::uniform(-0.85, 0.85));
    if (x.norm() > 0.85 || (x - kZ).norm() < 10 * hk) continue;
    ++far;
    const double ref = exact_disk_green(x, kZ);
    CHECK(std::abs(g(x).value - ref) <= 1e-3 * std::abs(ref));
  }
  // near field, including points inside the support
  for (const Point& x : {kZ, Point(kZ + Point(0.3 * hk, -0.1 * hk)), Point(kZ + Point(1.5 * hk, 0.0))}) {
    const GreenValue v = g(x);
    CHECK_FALSE(v.accuracy_loss);
    CHECK(v.value > 0);
    CHECK(std::abs(exact_regularized_green(eta.scaled(3.0), x).value - 3.0 * v.value) <= 1e-12 * std::abs(v.value));
    const auto grad = g.gradient(x);
    CHECK_FALSE(grad.accuracy_loss);
    CHECK(std::isfinite(grad.value.norm()));
  }
}

TEST_CASE("Green diagnostics on one coarse level") {
  const Domain disk = Domain::disk(1.0);
  const auto space = disk_space(0.3, 2);
  const GreenDiagnostics d = green_diagnostics(*space, disk, kZ, 4.0);
  CHECK(d.element == deepest_element_containing(space->mesh(), kZ));
  CHECK(d.accuracy_flags == 0);
  CHECK(d.g_h_at_z > 0);
  CHECK(std::abs(d.shell_l1_sum() - d.l1_grad_total) <= 1e-10 * d.l1_grad_total);
  REQUIRE(d.shells.size() == static_cast<std::size_t>(d.scales.levels + 1));
  Index elements = 0;
  double weighted = 0.0, l2sq = 0.0;
  for (const auto& row : d.shells) {
    CHECK(row.l2_grad >= 0);
    CHECK(row.l2 >= 0);
    CHECK(row.l1_grad >= 0);
    CHECK(row.weighted_h1 == doctest::Approx(row.d_j * row.l2_grad));
    elements += row.n_elements;
    weighted += row.weighted_h1;
    l2sq += row.l2_grad * row.l2_grad;
  }
  CHECK(elements == space->mesh().n_elements());
  CHECK(weighted == doctest::Approx(d.weighted_h1_sum).epsilon(1e-12));
  CHECK(std::sqrt(l2sq) == doctest::Approx(d.l2_grad_total).epsilon(1e-10));

  std::stringstream csv;
  write_green_csv(d, csv);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "j,d_j,l2_grad_shell,weighted_h1_shell,l2_shell,weighted_l2_shell");
  int lines = 0;
  std::string line, last;
  while (std::getline(csv, line)) {
    ++lines;
    last = line;
  }
  CHECK(lines == d.scales.levels + 2);
  CHECK(last.rfind("total,", 0) == 0);

  CHECK_THROWS_CODE(green_diagnostics(*space, Domain::ellipse(1.3, 0.9), kZ, 4.0), ErrorCode::InvalidArgument);
}

#include "isofem/fe_space.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <ostream>

namespace isofem {

BasisTables::BasisTables(const ReferenceElement<double>& ref, QuadratureRule<double> r) : rule(std::move(r)) {
  values.resize(ref.size(), rule.size());
  gradients.reserve(rule.size());
  for (int q = 0; q < rule.size(); ++q) {
    values.col(q) = ref.values(rule.point(q));
    gradients.push_back(ref.gradients(rule.point(q)));
  }
}

BasisTables::BasisTables(const ReferenceElement<double>& ref, const PointSet& points) {
  rule.points = points;
  rule.weights = Vector::Ones(points.cols());
  rule.exactness_degree = -1;
  values.resize(ref.size(), points.cols());
  for (Index q = 0; q < points.cols(); ++q) {
    values.col(q) = ref.values(points.col(q));
    gradients.push_back(ref.gradients(points.col(q)));
  }
}

// ---------------------------------------------------------------------------
// FeSpace

FeSpace::FeSpace(std::shared_ptr<const CurvedMesh> mesh) : mesh_(std::move(mesh)) {
  const Index n = mesh_->n_nodes();
  interior_index_.assign(n, -1);
  for (Index a = 0; a < n; ++a) {
    if (mesh_->is_boundary_node(a)) {
      boundary_.push_back(a);
    } else {
      interior_index_[a] = static_cast<Index>(interior_.size());
      interior_.push_back(a);
    }
  }
  const auto& base = mesh_->base();
  vertex_boundary_edges_.resize(base.n_vertices());
  for (const auto& be : base.boundary_edges) {
    const auto& tri = base.triangles[be.triangle];
    for (int v : kEdgeVertices[be.local_edge]) vertex_boundary_edges_[tri[v]].push_back(be);
  }

  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const int k = mesh_->degree();
  mix(&k, sizeof(k));
  mix(mesh_->nodes().data(), sizeof(double) * static_cast<std::size_t>(mesh_->nodes().size()));
  for (Index t = 0; t < mesh_->n_elements(); ++t) {
    const auto nodes = mesh_->element_nodes(t);
    mix(nodes.data(), nodes.size_bytes());
  }
  hash_ = h;
}

const std::vector<BoundaryEdge>& FeSpace::boundary_edges_at_vertex(Index vertex) const {
  return vertex_boundary_edges_[vertex];
}

std::string FeSpace::hash_string() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash_));
  return buf;
}

// ---------------------------------------------------------------------------
// Field

Field::Field(const FeSpace& space, Vector coefficients) : space_(&space), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != space.n_dofs()) {
    throw Error(ErrorCode::InvalidArgument, "coefficient vector does not match the space");
  }
}

Vector Field::element_coefficients(Index t) const {
  const auto nodes = space_->mesh().element_nodes(t);
  Vector c(static_cast<Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) c(static_cast<Index>(i)) = coefficients_(nodes[i]);
  return c;
}

bool Field::in_zero_boundary_space() const {
  for (Index a : space_->boundary_dofs())
    if (coefficients_(a) != 0.0) return false;
  return true;
}

Field interpolate(const FeSpace& space, const PointFunction& v) {
  Vector c(space.n_dofs());
  for (Index a = 0; a < space.n_dofs(); ++a) c(a) = v(space.mesh().node(a));
  return Field(space, std::move(c));
}

Field interpolate_zero_boundary(const FeSpace& space, const PointFunction& v) {
  Vector c = Vector::Zero(space.n_dofs());
  for (Index a : space.interior_dofs()) c(a) = v(space.mesh().node(a));
  return Field(space, std::move(c));
}

FieldValue eval_in_element(const Field& field, Index t, const Point& xhat) {
  const auto& ref = field.space().reference();
  const auto g = field.space().mesh().geom_nodes(t);
  const Vector c = field.element_coefficients(t);
  const auto grads = ref.gradients(xhat);
  const Jacobian jac = g * grads;
  FieldValue out;
  out.value = c.dot(ref.values(xhat));
  out.gradient = jac.transpose().partialPivLu().solve(grads.transpose() * c);
  return out;
}

FieldValue FieldEvaluator::operator()(const Field& field, const Point& x) const {
  const auto hit = locator_.locate(x);
  return eval_in_element(field, hit.element, hit.xhat);
}

FieldValue field_eval(const Field& field, const Point& x) {
  return FieldEvaluator(field.space())(field, x);
}

// ---------------------------------------------------------------------------
// Norms

ErrorNorms error_norms(const Field& field, const ScalarField2D& exact, int quadrature_degree) {
  const FeSpace& space = field.space();
  const CurvedMesh& mesh = space.mesh();
  const int k = space.degree();
  const int degree = quadrature_degree > 0 ? quadrature_degree : space.default_quadrature_degree();
  const BasisTables quad(space.reference(), build_quadrature<double>(degree));
  const BasisTables lattice(space.reference(), barycentric_lattice<double>(2 * k + 3));

  ErrorNorms n;
  double l2 = 0.0, h1 = 0.0;
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    const auto g = mesh.geom_nodes(t);
    const Vector c = field.element_coefficients(t);
    for (int q = 0; q < quad.rule.size(); ++q) {
      const Jacobian jac = g * quad.gradients[q];
      const double det = jac.determinant();
      const Point x = g * quad.values.col(q);
      const double e = exact.value(x) - c.dot(quad.values.col(q));
      const Point grad_h = jac.transpose().partialPivLu().solve(quad.gradients[q].transpose() * c);
      const Point ge = exact.gradient(x) - grad_h;
      const double w = quad.rule.weights(q) * std::abs(det);
      l2 += w * e * e;
      h1 += w * ge.squaredNorm();
    }
    for (int q = 0; q < lattice.rule.size(); ++q) {
      const Point x = g * lattice.values.col(q);
      n.linf = std::max(n.linf, std::abs(exact.value(x) - c.dot(lattice.values.col(q))));
    }
  }
  for (Index a = 0; a < space.n_dofs(); ++a) {
    n.linf = std::max(n.linf, std::abs(exact.value(mesh.node(a)) - field[a]));
  }
  n.l2 = std::sqrt(l2);
  n.h1_semi = std::sqrt(h1);
  return n;
}

double lemma31_ratio(const Field& field, Index element, int m, double p) {
  if (m != 0 && m != 1) throw Error(ErrorCode::InvalidArgument, "lemma31_ratio supports m in {0, 1}");
  const bool p_inf = std::isinf(p);
  if (!p_inf && p != 2.0) throw Error(ErrorCode::InvalidArgument, "lemma31_ratio supports p in {2, inf}");
  const FeSpace& space = field.space();
  const CurvedMesh& mesh = space.mesh();
  const auto& ref = space.reference();
  const int k = space.degree();

  // v - Idot v on T keeps only the boundary-node coefficients.
  const auto nodes = mesh.element_nodes(element);
  Vector w = Vector::Zero(ref.size());
  bool any = false;
  for (int i = 0; i < ref.size(); ++i) {
    if (mesh.is_boundary_node(nodes[i])) {
      w(i) = field[nodes[i]];
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::ElementNotOnBoundary, "element " + std::to_string(element) + " has no boundary node");

  const auto g = mesh.geom_nodes(element);
  double numerator = 0.0;
  auto pointwise = [&](const Eigen::VectorXd& phi, const Eigen::Matrix<double, Eigen::Dynamic, kDim>& grads) {
    if (m == 0) return std::abs(w.dot(phi));
    const Jacobian jac = g * grads;
    return Point(jac.transpose().partialPivLu().solve(grads.transpose() * w)).norm();
  };
  if (p_inf) {
    const BasisTables lattice(ref, barycentric_lattice<double>(2 * k + 3));
    for (int q = 0; q < lattice.rule.size(); ++q)
      numerator = std::max(numerator, pointwise(lattice.values.col(q), lattice.gradients[q]));
  } else {
    const BasisTables quad(ref, build_quadrature<double>(2 * k + 3));
    for (int q = 0; q < quad.rule.size(); ++q) {
      const double det = std::abs((g * quad.gradients[q]).determinant());
      const double v = pointwise(quad.values.col(q), quad.gradients[q]);
      numerator += quad.rule.weights(q) * det * v * v;
    }
    numerator = std::sqrt(numerator);
  }
  if (numerator == 0.0) return 0.0;

  // S: boundary edges through the boundary vertices of T, plus T's own.
  std::vector<BoundaryEdge> edges;
  const auto& tri = mesh.base().triangles[element];
  for (int v = 0; v < 3; ++v)
    for (const auto& be : space.boundary_edges_at_vertex(tri[v])) edges.push_back(be);
  std::sort(edges.begin(), edges.end(), [](const BoundaryEdge& a, const BoundaryEdge& b) {
    return a.triangle != b.triangle ? a.triangle < b.triangle : a.local_edge < b.local_edge;
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const BoundaryEdge& a, const BoundaryEdge& b) {
                            return a.triangle == b.triangle && a.local_edge == b.local_edge;
                          }),
              edges.end());

  const Point vhat[3] = {Point(0, 0), Point(1, 0), Point(0, 1)};
  const GaussLegendre<double> gl(k + 4);
  double denominator = 0.0;
  for (const auto& be : edges) {
    const Point a = vhat[kEdgeVertices[be.local_edge][0]], b = vhat[kEdgeVertices[be.local_edge][1]];
    const Vector c = field.element_coefficients(be.triangle);
    const auto ge = mesh.geom_nodes(be.triangle);
    if (p_inf) {
      const int samples = 10 * (k + 1);
      for (int i = 0; i < samples; ++i) {
        const double s = static_cast<double>(i) / (samples - 1);
        denominator = std::max(denominator, std::abs(c.dot(ref.values((1.0 - s) * a + s * b))));
      }
    } else {
      for (int q = 0; q < gl.size(); ++q) {
        const Point xhat = (1.0 - gl.nodes(q)) * a + gl.nodes(q) * b;
        const double speed = (ge * ref.gradients(xhat) * (b - a)).norm();
        const double v = c.dot(ref.values(xhat));
        denominator += gl.weights(q) * speed * v * v;
      }
    }
  }
  if (!p_inf) denominator = std::sqrt(denominator);
  const double ht = mesh.element_h(element);
  const double scale = std::pow(ht, (p_inf ? 0.0 : 1.0 / p) - m);
  if (denominator == 0.0) return std::numeric_limits<double>::infinity();
  return numerator / (scale * denominator);
}

// ---------------------------------------------------------------------------
// Field JSON

void write_field_json(const Field& field, std::ostream& out) {
  out << "{\"space_hash\":\"" << field.space().hash_string() << "\",\"coefficients\":[";
  for (Index a = 0; a < field.coefficients().size(); ++a) out << (a ? "," : "") << format_g17(field[a]);
  out << "]}\n";
}

Field read_field_json(const FeSpace& space, std::istream& in) {
  std::string hash;
  Vector c;
  try {
    nlohmann::json j;
    in >> j;
    hash = j.at("space_hash").get<std::string>();
    const auto& coeffs = j.at("coefficients");
    c.resize(static_cast<Index>(coeffs.size()));
    for (std::size_t i = 0; i < coeffs.size(); ++i) c(static_cast<Index>(i)) = coeffs[i].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("field JSON: ") + e.what());
  }
  if (hash != space.hash_string()) throw Error(ErrorCode::InvalidArgument, "field dump belongs to a different space");
  return Field(space, std::move(c));
}

}  // namespace isofem

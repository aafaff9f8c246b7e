#include "isofem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace isofem {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

// Edge -> owning (triangle, local edge) pairs.
std::unordered_map<std::uint64_t, std::vector<BoundaryEdge>> edge_owners(
    const std::vector<Triangle>& triangles) {
  std::unordered_map<std::uint64_t, std::vector<BoundaryEdge>> owners;
  owners.reserve(triangles.size() * 2);
  for (Index t = 0; t < static_cast<Index>(triangles.size()); ++t) {
    for (int e = 0; e < 3; ++e) {
      const Index a = triangles[t][kEdgeVertices[e][0]];
      const Index b = triangles[t][kEdgeVertices[e][1]];
      owners[edge_key(a, b)].push_back({t, e});
    }
  }
  return owners;
}

StraightTriangulation ring_triangulation(const Domain& domain, int n) {
  const Index nv = 1 + 3 * static_cast<Index>(n) * (n + 1);
  auto idx = [](int j, Index i) -> Index {
    if (j == 0) return 0;
    const Index count = 6 * static_cast<Index>(j);
    return 1 + 3 * static_cast<Index>(j) * (j - 1) + ((i % count) + count) % count;
  };

  StraightTriangulation tri;
  tri.vertices.resize(kDim, nv);
  tri.vertices.col(0).setZero();
  for (int j = 1; j <= n; ++j) {
    for (Index i = 0; i < 6 * j; ++i) {
      const double theta = kTwoPi * static_cast<double>(i) / (6.0 * j);
      tri.vertices.col(idx(j, i)) = (static_cast<double>(j) / n) * domain.boundary_point(theta);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int s = 0; s < 6; ++s) {
      auto inner = [&](int t) { return idx(j, static_cast<Index>(s) * j + t); };
      auto outer = [&](int t) { return idx(j + 1, static_cast<Index>(s) * (j + 1) + t); };
      for (int t = 0; t <= j; ++t) tri.triangles.push_back({outer(t), outer(t + 1), inner(t)});
      for (int t = 0; t < j; ++t) tri.triangles.push_back({inner(t), outer(t + 1), inner(t + 1)});
    }
  }

  // Jacobi sweeps of Laplacian smoothing on the interior vertices.
  const Index first_boundary = idx(n, 0);
  std::vector<std::vector<Index>> neighbors(nv);
  for (const auto& [key, owners] : edge_owners(tri.triangles)) {
    const Index a = static_cast<Index>(key >> 32), b = static_cast<Index>(key & 0xffffffffu);
    neighbors[a].push_back(b);
    neighbors[b].push_back(a);
  }
  for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());
  for (int sweep = 0; sweep < 10; ++sweep) {
    PointSet next = tri.vertices;
    for (Index v = 1; v < first_boundary; ++v) {
      Point sum = Point::Zero();
      for (Index w : neighbors[v]) sum += tri.vertices.col(w);
      next.col(v) = sum / static_cast<double>(neighbors[v].size());
    }
    tri.vertices = std::move(next);
  }
  tri.boundary_edges = find_boundary_edges(tri.triangles);
  return tri;
}

}  // namespace

std::vector<BoundaryEdge> find_boundary_edges(const std::vector<Triangle>& triangles) {
  std::vector<BoundaryEdge> out;
  for (const auto& [key, owners] : edge_owners(triangles)) {
    if (owners.size() == 1) out.push_back(owners.front());
  }
  std::sort(out.begin(), out.end(), [](const BoundaryEdge& a, const BoundaryEdge& b) {
    return a.triangle != b.triangle ? a.triangle < b.triangle : a.local_edge < b.local_edge;
  });
  return out;
}

// ---------------------------------------------------------------------------
// StraightTriangulation

double StraightTriangulation::signed_area(Index t) const {
  const Point a = vertex(triangles[t][0]), b = vertex(triangles[t][1]), c = vertex(triangles[t][2]);
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

double StraightTriangulation::diameter(Index t) const {
  const Point a = vertex(triangles[t][0]), b = vertex(triangles[t][1]), c = vertex(triangles[t][2]);
  return std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
}

double StraightTriangulation::inscribed_diameter(Index t) const {
  const Point a = vertex(triangles[t][0]), b = vertex(triangles[t][1]), c = vertex(triangles[t][2]);
  const double perimeter = (b - a).norm() + (c - b).norm() + (a - c).norm();
  return 4.0 * std::abs(signed_area(t)) / perimeter;
}

double StraightTriangulation::max_h() const {
  double h = 0.0;
  for (Index t = 0; t < n_triangles(); ++t) h = std::max(h, diameter(t));
  return h;
}

double StraightTriangulation::min_h() const {
  double h = std::numeric_limits<double>::infinity();
  for (Index t = 0; t < n_triangles(); ++t) h = std::min(h, diameter(t));
  return h;
}

double StraightTriangulation::shape_regularity() const {
  double sigma = 0.0;
  for (Index t = 0; t < n_triangles(); ++t) sigma = std::max(sigma, diameter(t) / inscribed_diameter(t));
  return sigma;
}

StraightTriangulation triangulate(const Domain& domain, double h_target, double max_shape_regularity) {
  if (!(h_target >= 1e-4) || !(h_target <= 4.0 * domain.tubular_radius())) {
    throw Error(ErrorCode::InvalidArgument,
                "h_target " + std::to_string(h_target) + " outside [1e-4, 4 delta0]");
  }
  int n = std::max(2, static_cast<int>(std::ceil(domain.max_radius() / h_target - 1e-9)));
  StraightTriangulation tri;
  for (;; ++n) {
    tri = ring_triangulation(domain, n);
    if (tri.max_h() <= 1.5 * h_target || n > 100000) break;
  }
  tri.target_h = h_target;
  for (Index t = 0; t < tri.n_triangles(); ++t) {
    if (!(tri.signed_area(t) > 0)) {
      throw Error(ErrorCode::MeshGenerationFailed, "inverted triangle after smoothing");
    }
  }
  const double sigma = tri.shape_regularity();
  if (!(sigma <= max_shape_regularity)) {
    throw Error(ErrorCode::MeshGenerationFailed, "shape regularity " + std::to_string(sigma) + " exceeds bound");
  }
  return tri;
}

// ---------------------------------------------------------------------------
// CurvedMesh

CurvedMesh::CurvedMesh(StraightTriangulation base, int k, PointSet nodes, std::vector<Index> node_map,
                       std::vector<char> boundary_flags, std::vector<char> curved)
    : base_(std::move(base)),
      k_(k),
      reference_(std::make_shared<const ReferenceElement<double>>(k)),
      nodes_(std::move(nodes)),
      node_map_(std::move(node_map)),
      boundary_flags_(std::move(boundary_flags)),
      curved_(std::move(curved)) {
  h_ = base_.max_h();
}

Eigen::Matrix<double, kDim, Eigen::Dynamic> CurvedMesh::geom_nodes(Index t) const {
  Eigen::Matrix<double, kDim, Eigen::Dynamic> g(kDim, nodes_per_element());
  for (int i = 0; i < nodes_per_element(); ++i) g.col(i) = nodes_.col(global_node(t, i));
  return g;
}

bool CurvedMesh::touches_boundary(Index t) const {
  for (Index a : element_nodes(t))
    if (boundary_flags_[a]) return true;
  return false;
}

Point CurvedMesh::affine_map(Index t, const Point& xhat) const {
  const auto& tri = base_.triangles[t];
  const Point a = base_.vertex(tri[0]), b = base_.vertex(tri[1]), c = base_.vertex(tri[2]);
  return a + (b - a) * xhat.x() + (c - a) * xhat.y();
}

CurvedMesh curve_mesh(const StraightTriangulation& tri, const Domain& domain, int k,
                      const CurveOptions& options) {
  if (k < 1 || k > 3) throw Error(ErrorCode::UnsupportedDegree, "mesh degree must be 1, 2 or 3");
  const ReferenceElement<double> ref(k);
  const int n_local = ref.size();

  std::unordered_map<std::uint64_t, char> boundary_edge_keys;
  for (const auto& be : tri.boundary_edges) {
    const auto& t = tri.triangles[be.triangle];
    boundary_edge_keys[edge_key(t[kEdgeVertices[be.local_edge][0]], t[kEdgeVertices[be.local_edge][1]])] = 1;
  }

  std::vector<Point> coords;
  std::vector<char> flags(tri.n_vertices(), 0);
  coords.reserve(tri.n_vertices() * k * k);
  for (Index v = 0; v < tri.n_vertices(); ++v) coords.push_back(tri.vertex(v));
  for (const auto& be : tri.boundary_edges) {
    const auto& t = tri.triangles[be.triangle];
    flags[t[kEdgeVertices[be.local_edge][0]]] = 1;
    flags[t[kEdgeVertices[be.local_edge][1]]] = 1;
  }

  // Straight-edge lattice point at fraction s from `from`, pushed to the
  // boundary when the edge is curved.
  auto edge_point = [&](const Point& from, const Point& to, double s, bool curved) -> Point {
    const Point p = (1.0 - s) * from + s * to;
    return curved ? project_to_boundary(domain, p).foot : p;
  };

  // Edge nodes, deduplicated on (edge, position from the lower vertex index).
  std::unordered_map<std::uint64_t, Index> edge_base;
  for (const auto& t : tri.triangles) {
    for (int e = 0; e < 3; ++e) {
      const Index a = std::min(t[kEdgeVertices[e][0]], t[kEdgeVertices[e][1]]);
      const Index b = std::max(t[kEdgeVertices[e][0]], t[kEdgeVertices[e][1]]);
      const auto key = edge_key(a, b);
      if (edge_base.count(key)) continue;
      edge_base[key] = static_cast<Index>(coords.size());
      const bool on_boundary = boundary_edge_keys.count(key) != 0;
      for (int s = 1; s < k; ++s) {
        coords.push_back(edge_point(tri.vertex(a), tri.vertex(b), static_cast<double>(s) / k,
                                    on_boundary && options.curve_boundary));
        flags.push_back(on_boundary ? 1 : 0);
      }
    }
  }

  std::vector<Index> node_map(tri.triangles.size() * n_local);
  std::vector<char> curved(tri.triangles.size(), 0);
  for (Index ti = 0; ti < tri.n_triangles(); ++ti) {
    const auto& t = tri.triangles[ti];
    std::array<bool, 3> edge_curved{};
    for (int e = 0; e < 3; ++e) {
      edge_curved[e] = options.curve_boundary &&
                       boundary_edge_keys.count(edge_key(t[kEdgeVertices[e][0]], t[kEdgeVertices[e][1]])) != 0;
      if (edge_curved[e] && k > 1) curved[ti] = 1;
    }
    for (int i = 0; i < n_local; ++i) {
      const LatticeNode& info = ref.node_info(i);
      Index g = 0;
      if (info.vertex >= 0) {
        g = t[info.vertex];
      } else if (info.edge >= 0) {
        const Index va = t[kEdgeVertices[info.edge][0]], vb = t[kEdgeVertices[info.edge][1]];
        const int from_low = va < vb ? info.edge_position : k - info.edge_position;
        g = edge_base.at(edge_key(va, vb)) + from_low - 1;
      } else {
        const Point xhat = ref.node(i);
        Point x = tri.vertex(t[0]) + (tri.vertex(t[1]) - tri.vertex(t[0])) * xhat.x() +
                  (tri.vertex(t[2]) - tri.vertex(t[0])) * xhat.y();
        if (options.interior == InteriorNodePlacement::Blended) {
          // Displacement lambda_a lambda_b q(s) with q(s) = d(s) / (s (1 - s)),
          // d the boundary offset of the straight edge point at fraction s.
          for (int e = 0; e < 3; ++e) {
            if (!edge_curved[e]) continue;
            const int ia = kEdgeVertices[e][0], ib = kEdgeVertices[e][1];
            const double la = static_cast<double>(info.alpha[ia]) / k;
            const double lb = static_cast<double>(info.alpha[ib]) / k;
            const double s = lb / (la + lb);
            const Point pa = tri.vertex(t[ia]), pb = tri.vertex(t[ib]);
            const Point straight = (1.0 - s) * pa + s * pb;
            const Point offset = edge_point(pa, pb, s, true) - straight;
            x += la * lb * offset / (s * (1.0 - s));
          }
        }
        g = static_cast<Index>(coords.size());
        coords.push_back(x);
        flags.push_back(0);
      }
      node_map[ti * n_local + i] = g;
    }
  }

  PointSet nodes(kDim, static_cast<Index>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) nodes.col(static_cast<Index>(i)) = coords[i];
  CurvedMesh mesh(tri, k, std::move(nodes), std::move(node_map), std::move(flags), std::move(curved));

  const auto rule = build_quadrature<double>(2 * k + 3);
  for (Index ti = 0; ti < mesh.n_elements(); ++ti) {
    if (!mesh.is_curved(ti)) continue;
    for (int q = 0; q < rule.size(); ++q) {
      if (!(element_map(mesh, ti, rule.point(q)).jacobian.determinant() > 0)) {
        throw Error(ErrorCode::CurvingFailed,
                    "non-positive Jacobian in element " + std::to_string(ti) + "; mesh too coarse");
      }
    }
  }
  return mesh;
}

CurvedMesh permute_nodes(const CurvedMesh& mesh, std::span<const Index> perm) {
  if (static_cast<Index>(perm.size()) != mesh.n_nodes()) {
    throw Error(ErrorCode::InvalidArgument, "permutation size mismatch");
  }
  PointSet nodes(kDim, mesh.n_nodes());
  std::vector<char> flags(mesh.n_nodes());
  for (Index a = 0; a < mesh.n_nodes(); ++a) {
    nodes.col(perm[a]) = mesh.node(a);
    flags[perm[a]] = mesh.boundary_flags()[a];
  }
  std::vector<Index> node_map;
  node_map.reserve(mesh.n_elements() * mesh.nodes_per_element());
  std::vector<char> curved(mesh.n_elements());
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    for (Index a : mesh.element_nodes(t)) node_map.push_back(perm[a]);
    curved[t] = mesh.is_curved(t);
  }
  return CurvedMesh(mesh.base(), mesh.degree(), std::move(nodes), std::move(node_map), std::move(flags),
                    std::move(curved));
}

ElementMapValue element_map(const CurvedMesh& mesh, Index t, const Point& xhat) {
  const auto g = mesh.geom_nodes(t);
  const auto& ref = mesh.reference();
  return {g * ref.values(xhat), g * ref.gradients(xhat)};
}

bool try_invert_element_map(const CurvedMesh& mesh, Index t, const Point& x, Point& xhat) {
  const auto g = mesh.geom_nodes(t);
  const auto& ref = mesh.reference();
  const double tol = 1e-12 * mesh.element_h(t);
  xhat = Point::Constant(1.0 / 3.0);
  for (int iter = 0; iter < 50; ++iter) {
    const Point r = g * ref.values(xhat) - x;
    if (r.norm() <= 0.1 * tol) return true;
    const Jacobian jac = g * ref.gradients(xhat);
    const Point step = jac.partialPivLu().solve(r);
    xhat -= step;
    if (!xhat.allFinite() || xhat.cwiseAbs().maxCoeff() > 10.0) return false;
    if (step.norm() <= 1e-15) break;
  }
  return (g * ref.values(xhat) - x).norm() <= tol;
}

Point invert_element_map(const CurvedMesh& mesh, Index t, const Point& x) {
  Point xhat;
  const bool ok = try_invert_element_map(mesh, t, x, xhat);
  if (xhat.allFinite() && min_barycentric(xhat) < -1e-10) {
    throw Error(ErrorCode::NotInElement, "point lies outside element " + std::to_string(t));
  }
  if (!ok) {
    if (!xhat.allFinite() || xhat.cwiseAbs().maxCoeff() > 10.0) {
      throw Error(ErrorCode::NotInElement, "point lies outside element " + std::to_string(t));
    }
    throw Error(ErrorCode::NoConvergence, "element map inversion did not converge");
  }
  return xhat;
}

double mesh_area(const CurvedMesh& mesh, int quadrature_degree) {
  const int degree = quadrature_degree > 0 ? quadrature_degree : 2 * mesh.degree() + 3;
  const auto rule = build_quadrature<double>(degree);
  const auto& ref = mesh.reference();
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, kDim>> grads;
  for (int q = 0; q < rule.size(); ++q) grads.push_back(ref.gradients(rule.point(q)));
  double area = 0.0;
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    const auto g = mesh.geom_nodes(t);
    for (int q = 0; q < rule.size(); ++q) area += rule.weights(q) * (g * grads[q]).determinant();
  }
  return area;
}

// ---------------------------------------------------------------------------
// PointLocator

PointLocator::PointLocator(const CurvedMesh& mesh) : mesh_(&mesh) {
  element_boxes_.reserve(mesh.n_elements());
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    Eigen::AlignedBox<double, kDim> b;
    const auto g = mesh.geom_nodes(t);
    for (Index i = 0; i < g.cols(); ++i) b.extend(Point(g.col(i)));
    const double pad = 0.1 * mesh.element_h(t);
    b.min().array() -= pad;
    b.max().array() += pad;
    element_boxes_.push_back(b);
    box_.extend(b);
  }
  const int n = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.n_elements()))));
  nx_ = ny_ = n;
  cell_x_ = box_.sizes().x() / nx_;
  cell_y_ = box_.sizes().y() / ny_;
  buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
  auto cell = [&](double v, double lo, double w, int count) {
    return std::clamp(static_cast<int>((v - lo) / w), 0, count - 1);
  };
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    const auto& b = element_boxes_[t];
    const int i0 = cell(b.min().x(), box_.min().x(), cell_x_, nx_), i1 = cell(b.max().x(), box_.min().x(), cell_x_, nx_);
    const int j0 = cell(b.min().y(), box_.min().y(), cell_y_, ny_), j1 = cell(b.max().y(), box_.min().y(), cell_y_, ny_);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) buckets_[static_cast<std::size_t>(i) * ny_ + j].push_back(t);
  }
}

bool PointLocator::try_locate(const Point& x, Hit& hit) const {
  if (!box_.contains(x)) return false;
  const int i = std::clamp(static_cast<int>((x.x() - box_.min().x()) / cell_x_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>((x.y() - box_.min().y()) / cell_y_), 0, ny_ - 1);
  double best = -std::numeric_limits<double>::infinity();
  for (Index t : buckets_[static_cast<std::size_t>(i) * ny_ + j]) {
    if (!element_boxes_[t].contains(x)) continue;
    Point xhat;
    if (!try_invert_element_map(*mesh_, t, x, xhat)) continue;
    const double m = min_barycentric(xhat);
    if (m > best) {
      best = m;
      hit = {t, xhat};
      if (m >= 0.0) return true;
    }
  }
  return best >= -1e-10;
}

PointLocator::Hit PointLocator::locate(const Point& x) const {
  Hit hit;
  if (!try_locate(x, hit)) {
    throw Error(ErrorCode::PointNotInMesh, "no element contains the point");
  }
  return hit;
}

// ---------------------------------------------------------------------------
// Hypotheses

HypothesisReport verify_hypotheses(const CurvedMesh& mesh, const Domain& domain) {
  HypothesisReport r;
  const auto& base = mesh.base();
  const auto& ref = mesh.reference();
  const int k = mesh.degree();

  // H1: every edge has one or two owners; single-owner edges sit on the boundary.
  r.conforming = true;
  for (const auto& [key, owners] : edge_owners(base.triangles)) {
    if (owners.size() > 2) r.conforming = false;
    if (owners.size() == 1) {
      const Index a = static_cast<Index>(key >> 32), b = static_cast<Index>(key & 0xffffffffu);
      for (Index v : {a, b}) {
        try {
          if (std::abs(project_to_boundary(domain, base.vertex(v)).t) > 1e-12) r.conforming = false;
        } catch (const Error&) {
          r.conforming = false;
        }
      }
    }
  }

  r.shape_regularity = base.shape_regularity();
  r.quasi_uniformity = base.quasi_uniformity();
  r.shape_regular = r.shape_regularity <= 8.0;
  r.quasi_uniform = r.quasi_uniformity <= 4.0;

  const auto lattice = barycentric_lattice<double>(2 * k);
  const auto rule = build_quadrature<double>(2 * k + 3);
  std::vector<std::vector<Eigen::VectorXd>> derivative_tables(k + 2);
  // derivative_tables[m][p * npts + q] : d^m / dx^p dy^(m-p) at lattice point q
  for (int m = 1; m <= k + 1; ++m)
    for (int p = 0; p <= m; ++p)
      for (Index q = 0; q < lattice.cols(); ++q)
        derivative_tables[m].push_back(ref.derivatives(lattice.col(q), p, m - p));

  r.h6_constants.assign(k + 1, 0.0);
  r.min_jacobian = std::numeric_limits<double>::infinity();
  r.min_jacobian_ratio = std::numeric_limits<double>::infinity();
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    const auto g = mesh.geom_nodes(t);
    const double ht = mesh.element_h(t);
    for (int i = 0; i < ref.size(); ++i) {
      const int v = ref.node_info(i).vertex;
      const Point affine = v >= 0 ? mesh.base().vertex(mesh.base().triangles[t][v]) : mesh.affine_map(t, ref.node(i));
      const double d = (Point(g.col(i)) - affine).norm();
      r.h4_constant = std::max(r.h4_constant, d / (ht * ht));
    }
    for (int m = 1; m <= k + 1; ++m) {
      double worst = 0.0;
      for (const auto& d : derivative_tables[m]) worst = std::max(worst, (g * d).norm());
      r.h6_constants[m - 1] = std::max(r.h6_constants[m - 1], worst / std::pow(ht, m));
    }
    const double affine_det = 2.0 * base.signed_area(t);
    auto check = [&](const Point& xhat) {
      const double det = (g * ref.gradients(xhat)).determinant();
      r.min_jacobian = std::min(r.min_jacobian, det);
      r.min_jacobian_ratio = std::min(r.min_jacobian_ratio, det / affine_det);
    };
    for (int q = 0; q < rule.size(); ++q) check(rule.point(q));
    for (Index q = 0; q < lattice.cols(); ++q) check(lattice.col(q));
  }
  r.jacobian_positive = r.min_jacobian > 0.0;
  r.nodes_close = std::isfinite(r.h4_constant);

  // H8: distance of the discrete boundary to the true one.
  const int samples = 10 * (k + 1);
  const Point vhat[3] = {Point(0, 0), Point(1, 0), Point(0, 1)};
  for (const auto& be : base.boundary_edges) {
    const Point a = vhat[kEdgeVertices[be.local_edge][0]], b = vhat[kEdgeVertices[be.local_edge][1]];
    for (int i = 0; i < samples; ++i) {
      const double s = static_cast<double>(i) / (samples - 1);
      const Point x = element_map(mesh, be.triangle, (1.0 - s) * a + s * b).x;
      r.h8_sup_distance = std::max(r.h8_sup_distance, std::abs(project_to_boundary(domain, x).t));
    }
  }
  r.h8_expected = std::pow(mesh.h(), k + 1);
  r.boundary_on_order = r.h8_sup_distance <= r.h8_expected;
  return r;
}

// ---------------------------------------------------------------------------
// Dyadic decomposition

namespace {

PointSet element_samples(const CurvedMesh& mesh, Index t, const Eigen::MatrixXd& basis_at_lattice) {
  return mesh.geom_nodes(t) * basis_at_lattice;
}

Eigen::MatrixXd lattice_basis(const CurvedMesh& mesh) {
  const auto lattice = barycentric_lattice<double>(2 * mesh.degree());
  Eigen::MatrixXd values(mesh.nodes_per_element(), lattice.cols());
  for (Index q = 0; q < lattice.cols(); ++q) values.col(q) = mesh.reference().values(lattice.col(q));
  return values;
}

double sample_distance(const PointSet& a, const PointSet& b) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < a.cols(); ++i)
    for (Index j = 0; j < b.cols(); ++j) best = std::min(best, (a.col(i) - b.col(j)).squaredNorm());
  return std::sqrt(best);
}

}  // namespace

double element_distance(const CurvedMesh& mesh, Index t, Index s) {
  if (t == s) return 0.0;
  const auto basis = lattice_basis(mesh);
  return sample_distance(element_samples(mesh, t, basis), element_samples(mesh, s, basis));
}

double DyadicScales::scale(int j) const { return std::ldexp(d0, j); }

DyadicScales dyadic_scales(double diameter, double h, double stride_ratio) {
  if (!(stride_ratio >= 1.0)) throw Error(ErrorCode::InvalidArgument, "stride ratio L must be >= 1");
  DyadicScales s;
  s.d0 = stride_ratio * h;
  s.levels = diameter > s.d0 ? static_cast<int>(std::ceil(std::log2(diameter / s.d0))) : 0;
  return s;
}

std::vector<Index> DyadicDecomposition::shell(int j) const {
  std::vector<Index> out;
  for (Index t = 0; t < static_cast<Index>(labels.size()); ++t)
    if (labels[t] == j) out.push_back(t);
  return out;
}

double mesh_diameter(const CurvedMesh& mesh) {
  const int k = mesh.degree();
  const int samples = 2 * k + 1;
  const Point vhat[3] = {Point(0, 0), Point(1, 0), Point(0, 1)};
  std::vector<Point> pts;
  for (const auto& be : mesh.base().boundary_edges) {
    const Point a = vhat[kEdgeVertices[be.local_edge][0]], b = vhat[kEdgeVertices[be.local_edge][1]];
    for (int i = 0; i < samples; ++i) {
      const double s = static_cast<double>(i) / samples;
      pts.push_back(element_map(mesh, be.triangle, (1.0 - s) * a + s * b).x);
    }
  }
  double diam2 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) diam2 = std::max(diam2, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(diam2);
}

DyadicDecomposition dyadic_decomposition(const CurvedMesh& mesh, Index center, double stride_ratio) {
  DyadicDecomposition dd;
  dd.center_element = center;
  dd.diameter = mesh_diameter(mesh);
  dd.scales = dyadic_scales(dd.diameter, mesh.h(), stride_ratio);
  const auto basis = lattice_basis(mesh);
  const PointSet center_samples = element_samples(mesh, center, basis);
  dd.labels.resize(mesh.n_elements());
  dd.distances.resize(mesh.n_elements());
  for (Index t = 0; t < mesh.n_elements(); ++t) {
    const double d = t == center ? 0.0 : sample_distance(element_samples(mesh, t, basis), center_samples);
    dd.distances[t] = d;
    int j = 0;
    if (d > dd.scales.d0) {
      j = 1;
      while (j < dd.scales.levels && d > dd.scales.scale(j)) ++j;
    }
    dd.labels[t] = j;
  }
  return dd;
}

}  // namespace isofem

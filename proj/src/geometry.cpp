#include "isofem/geometry.hpp"

#include "isofem/quadrature.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace isofem {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kCurvatureSamples = 4096;

double wrap_angle(double theta) {
  theta = std::fmod(theta, kTwoPi);
  if (theta < 0) theta += kTwoPi;
  if (theta >= kTwoPi) theta = 0.0;
  return theta;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_numbers(std::string_view text, std::string_view spec) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view token = text.substr(0, comma);
    double v = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size()) {
      throw Error(ErrorCode::InvalidArgument, "malformed domain spec '" + std::string(spec) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (text.empty()) {
      throw Error(ErrorCode::InvalidArgument, "malformed domain spec '" + std::string(spec) + "'");
    }
  }
  return out;
}

}  // namespace

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotInTubularNeighborhood: return "NotInTubularNeighborhood";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MeshGenerationFailed: return "MeshGenerationFailed";
    case ErrorCode::CurvingFailed: return "CurvingFailed";
    case ErrorCode::NotInElement: return "NotInElement";
    case ErrorCode::UnsupportedDegree: return "UnsupportedDegree";
    case ErrorCode::PointNotInMesh: return "PointNotInMesh";
    case ErrorCode::ElementNotOnBoundary: return "ElementNotOnBoundary";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::EmptyBoundary: return "EmptyBoundary";
    case ErrorCode::IndefiniteMatrix: return "IndefiniteMatrix";
    case ErrorCode::IllConditionedDualBasis: return "IllConditionedDualBasis";
    case ErrorCode::SingularArgument: return "SingularArgument";
    case ErrorCode::NearFieldAccuracyLoss: return "NearFieldAccuracyLoss";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(Kind kind, double a, double b, int m) : kind_(kind), a_(a), b_(b), m_(m) {
  for (int i = 0; i < kCurvatureSamples; ++i) {
    const double theta = kTwoPi * i / kCurvatureSamples;
    max_kappa_ = std::max(max_kappa_, std::abs(curvature(theta)));
    max_radius_ = std::max(max_radius_, radius(theta));
  }
  delta0_ = 0.5 / max_kappa_;
}

Domain Domain::disk(double radius) {
  if (!(radius > 0)) throw Error(ErrorCode::InvalidArgument, "disk radius must be positive");
  return Domain(Kind::Disk, radius, radius, 0);
}

Domain Domain::ellipse(double a, double b) {
  if (!(a > 0 && b > 0)) throw Error(ErrorCode::InvalidArgument, "ellipse semi-axes must be positive");
  return Domain(Kind::Ellipse, a, b, 0);
}

Domain Domain::star(double base_radius, double amplitude, int frequency) {
  if (!(base_radius > 0) || !(amplitude >= 0) || frequency < 1) {
    throw Error(ErrorCode::InvalidArgument, "star needs R0 > 0, eps >= 0, m >= 1");
  }
  const double m = frequency;
  if (!(amplitude * (1.0 + m * m) < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "star requires eps * (1 + m^2) < 0.5");
  }
  return Domain(Kind::Star, base_radius, amplitude, frequency);
}

Domain Domain::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "domain spec needs 'kind:params', got '" + std::string(spec) + "'");
  }
  const std::string_view kind = spec.substr(0, colon);
  const auto values = parse_numbers(spec.substr(colon + 1), spec);
  if (kind == "disk" && values.size() == 1) return disk(values[0]);
  if (kind == "ellipse" && values.size() == 2) return ellipse(values[0], values[1]);
  if (kind == "star" && values.size() == 3) {
    const double m = values[2];
    if (m != std::floor(m)) throw Error(ErrorCode::InvalidArgument, "star frequency must be an integer");
    return star(values[0], values[1], static_cast<int>(m));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown domain spec '" + std::string(spec) + "'");
}

std::string Domain::spec() const {
  switch (kind_) {
    case Kind::Disk: return "disk:" + format_number(a_);
    case Kind::Ellipse: return "ellipse:" + format_number(a_) + "," + format_number(b_);
    case Kind::Star:
      return "star:" + format_number(a_) + "," + format_number(b_) + "," + std::to_string(m_);
  }
  return {};
}

double Domain::radius(double theta) const {
  switch (kind_) {
    case Kind::Disk: return a_;
    case Kind::Ellipse: {
      const double c = std::cos(theta), s = std::sin(theta);
      return a_ * b_ / std::sqrt(b_ * b_ * c * c + a_ * a_ * s * s);
    }
    case Kind::Star: return a_ * (1.0 + b_ * std::cos(m_ * theta));
  }
  return 0.0;
}

double Domain::radius_d1(double theta) const {
  switch (kind_) {
    case Kind::Disk: return 0.0;
    case Kind::Ellipse: {
      const double c = std::cos(theta), s = std::sin(theta);
      const double q = b_ * b_ * c * c + a_ * a_ * s * s;
      const double dq = (a_ * a_ - b_ * b_) * std::sin(2.0 * theta);
      return -0.5 * a_ * b_ * dq / (q * std::sqrt(q));
    }
    case Kind::Star: return -a_ * b_ * m_ * std::sin(m_ * theta);
  }
  return 0.0;
}

double Domain::radius_d2(double theta) const {
  switch (kind_) {
    case Kind::Disk: return 0.0;
    case Kind::Ellipse: {
      const double c = std::cos(theta), s = std::sin(theta);
      const double q = b_ * b_ * c * c + a_ * a_ * s * s;
      const double dq = (a_ * a_ - b_ * b_) * std::sin(2.0 * theta);
      const double ddq = 2.0 * (a_ * a_ - b_ * b_) * std::cos(2.0 * theta);
      const double q32 = q * std::sqrt(q);
      return a_ * b_ * (0.75 * dq * dq / (q32 * q) - 0.5 * ddq / q32);
    }
    case Kind::Star: return -a_ * b_ * m_ * m_ * std::cos(m_ * theta);
  }
  return 0.0;
}

Point Domain::boundary_point(double theta) const {
  return radius(theta) * Point(std::cos(theta), std::sin(theta));
}

Point Domain::tangent(double theta) const {
  const Point er(std::cos(theta), std::sin(theta));
  const Point et(-std::sin(theta), std::cos(theta));
  return radius_d1(theta) * er + radius(theta) * et;
}

Point Domain::tangent_d1(double theta) const {
  const Point er(std::cos(theta), std::sin(theta));
  const Point et(-std::sin(theta), std::cos(theta));
  return (radius_d2(theta) - radius(theta)) * er + 2.0 * radius_d1(theta) * et;
}

double Domain::curvature(double theta) const {
  const double r = radius(theta), r1 = radius_d1(theta), r2 = radius_d2(theta);
  const double speed2 = r * r + r1 * r1;
  return (r * r + 2.0 * r1 * r1 - r * r2) / (speed2 * std::sqrt(speed2));
}

bool Domain::contains(const Point& x) const {
  return x.norm() <= radius(std::atan2(x.y(), x.x()));
}

double Domain::area() const {
  // periodic trapezoid rule is spectrally accurate here
  constexpr int n = 4096;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = radius(kTwoPi * i / n);
    sum += 0.5 * r * r;
  }
  return sum * kTwoPi / n;
}

// ---------------------------------------------------------------------------
// Fields

ScalarField2D constant_field(double c) {
  return ScalarField2D{[c](const Point&) { return c; }, [](const Point&) { return Point::Zero().eval(); },
                       [](const Point&) { return 0.0; }, -1};
}

ScalarField2D affine_field(double a, double b, double c) {
  return ScalarField2D{[=](const Point& x) { return a * x.x() + b * x.y() + c; },
                       [=](const Point&) { return Point(a, b); }, [](const Point&) { return 0.0; }, -1};
}

ManufacturedProblem manufactured_problem(const Domain& domain) {
  switch (domain.kind()) {
    case Domain::Kind::Disk: {
      const double r2 = domain.param_a() * domain.param_a();
      ScalarField2D u;
      u.value = [r2](const Point& x) { return (1.0 - x.squaredNorm() / r2) * std::sin(x.x() + 2.0 * x.y()); };
      u.gradient = [r2](const Point& x) {
        const double w = 1.0 - x.squaredNorm() / r2;
        const double s = std::sin(x.x() + 2.0 * x.y()), c = std::cos(x.x() + 2.0 * x.y());
        return Point(-2.0 * x.x() / r2 * s + w * c, -2.0 * x.y() / r2 * s + 2.0 * w * c);
      };
      u.laplacian = [r2](const Point& x) {
        const double w = 1.0 - x.squaredNorm() / r2;
        const double arg = x.x() + 2.0 * x.y();
        const double s = std::sin(arg), c = std::cos(arg);
        return -4.0 / r2 * s - 4.0 / r2 * arg * c - 5.0 * w * s;
      };
      ScalarField2D f;
      f.value = [lap = u.laplacian](const Point& x) { return -lap(x); };
      f.gradient = [r2](const Point& x) {
        // d/dx of -(lap u)
        const double w = 1.0 - x.squaredNorm() / r2;
        const double arg = x.x() + 2.0 * x.y();
        const double s = std::sin(arg), c = std::cos(arg);
        const double dlap_dw = -5.0 * s;
        const double dlap_darg = -4.0 / r2 * c - 4.0 / r2 * (c - arg * s) - 5.0 * w * c;
        const Point dw(-2.0 * x.x() / r2, -2.0 * x.y() / r2);
        const Point darg(1.0, 2.0);
        return Point(-(dlap_dw * dw + dlap_darg * darg));
      };
      return {u, f};
    }
    case Domain::Kind::Ellipse: {
      const double ia2 = 1.0 / (domain.param_a() * domain.param_a());
      const double ib2 = 1.0 / (domain.param_b() * domain.param_b());
      ScalarField2D u;
      u.value = [=](const Point& x) {
        return (1.0 - x.x() * x.x() * ia2 - x.y() * x.y() * ib2) * std::cos(x.x() - x.y());
      };
      u.gradient = [=](const Point& x) {
        const double w = 1.0 - x.x() * x.x() * ia2 - x.y() * x.y() * ib2;
        const double c = std::cos(x.x() - x.y()), s = std::sin(x.x() - x.y());
        return Point(-2.0 * x.x() * ia2 * c - w * s, -2.0 * x.y() * ib2 * c + w * s);
      };
      u.laplacian = [=](const Point& x) {
        const double w = 1.0 - x.x() * x.x() * ia2 - x.y() * x.y() * ib2;
        const double c = std::cos(x.x() - x.y()), s = std::sin(x.x() - x.y());
        return (-2.0 * ia2 - 2.0 * ib2) * c + 4.0 * (x.x() * ia2 - x.y() * ib2) * s - 2.0 * w * c;
      };
      ScalarField2D f;
      f.value = [lap = u.laplacian](const Point& x) { return -lap(x); };
      f.gradient = [=](const Point& x) {
        const double w = 1.0 - x.x() * x.x() * ia2 - x.y() * x.y() * ib2;
        const double c = std::cos(x.x() - x.y()), s = std::sin(x.x() - x.y());
        // lap = A c + 4 B s - 2 w c, with A const, B = x ia2 - y ib2
        const double A = -2.0 * ia2 - 2.0 * ib2;
        const double B = x.x() * ia2 - x.y() * ib2;
        const Point dc(-s, s), ds(c, -c), dB(ia2, -ib2), dw(-2.0 * x.x() * ia2, -2.0 * x.y() * ib2);
        const Point dlap = A * dc + 4.0 * (dB * s + B * ds) - 2.0 * (dw * c + w * dc);
        return Point(-dlap);
      };
      return {u, f};
    }
    case Domain::Kind::Star:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "no manufactured solution for domain " + domain.spec());
}

// ---------------------------------------------------------------------------
// Projection

namespace {

double stationarity(const Domain& d, const Point& x, double theta) {
  return (d.boundary_point(theta) - x).dot(d.tangent(theta));
}

}  // namespace

BoundaryProjection project_to_boundary(const Domain& domain, const Point& x) {
  constexpr double kTol = 1e-13;
  constexpr int kMaxIter = 100;

  const double seed = std::atan2(x.y(), x.x());
  const double seed_dist = (x - domain.boundary_point(seed)).norm();

  double theta = seed;
  bool converged = false;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const Point g = domain.boundary_point(theta);
    const Point dg = domain.tangent(theta);
    const Point ddg = domain.tangent_d1(theta);
    const double phi = (g - x).dot(dg);
    const double dphi = dg.squaredNorm() + (g - x).dot(ddg);
    if (!(dphi > 0)) break;  // left the basin of the minimum
    const double step = phi / dphi;
    theta -= step;
    if (std::abs(step) <= kTol) {
      converged = true;
      break;
    }
  }
  if (converged && (x - domain.boundary_point(theta)).norm() > seed_dist * (1.0 + 1e-12) + 1e-15) {
    converged = false;  // a stationary point that is not the nearest one
  }

  if (!converged) {
    // Coarse scan for the global minimum, then bisection on the stationarity
    // condition inside the bracketing cell pair.
    constexpr int n = 720;
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double d = (x - domain.boundary_point(kTwoPi * i / n)).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    double lo = kTwoPi * (best - 1) / n, hi = kTwoPi * (best + 1) / n;
    double flo = stationarity(domain, x, lo), fhi = stationarity(domain, x, hi);
    if (!(flo <= 0 && fhi >= 0)) {
      throw Error(ErrorCode::NoConvergence, "projection bracket has no sign change");
    }
    for (int iter = 0; iter < kMaxIter && hi - lo > kTol; ++iter) {
      const double mid = 0.5 * (lo + hi);
      const double fm = stationarity(domain, x, mid);
      if (fm <= 0) lo = mid; else hi = mid;
    }
    if (hi - lo > kTol) throw Error(ErrorCode::NoConvergence, "projection bisection did not converge");
    theta = 0.5 * (lo + hi);
  }

  theta = wrap_angle(theta);
  BoundaryProjection p;
  p.theta = theta;
  p.foot = domain.boundary_point(theta);
  p.t = (x - p.foot).dot(unit_normal(domain, theta));
  if (std::abs(p.t) > domain.tubular_radius()) {
    throw Error(ErrorCode::NotInTubularNeighborhood,
                "distance " + std::to_string(std::abs(p.t)) + " exceeds tubular radius");
  }
  return p;
}

Point unit_normal(const Domain& domain, double theta) {
  const Point tau = domain.tangent(theta);
  return Point(tau.y(), -tau.x()).normalized();
}

double extend_by_reflection(const Domain& domain, const std::function<double(const Point&)>& f,
                            const Point& x) {
  if (domain.contains(x)) return f(x);
  BoundaryProjection p;
  try {
    p = project_to_boundary(domain, x);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotInTubularNeighborhood) {
      throw Error(ErrorCode::OutOfRange, "point too far outside the domain for reflection");
    }
    throw;
  }
  const double t = std::max(p.t, 0.0);
  if (3.0 * t > domain.tubular_radius()) {
    throw Error(ErrorCode::OutOfRange, "reflected samples leave the tubular neighborhood");
  }
  const Point n = unit_normal(domain, p.theta);
  return 6.0 * f(p.foot - t * n) - 8.0 * f(p.foot - 2.0 * t * n) + 3.0 * f(p.foot - 3.0 * t * n);
}

double boundary_skin_measure(const Domain& domain, std::span<const Point> samples, double delta,
                             bool closed) {
  if (delta <= 0.0 || samples.size() < 2) return 0.0;
  if (delta > domain.tubular_radius()) {
    throw Error(ErrorCode::OutOfRange, "skin width exceeds tubular radius");
  }
  std::vector<double> theta;
  theta.reserve(samples.size() + 1);
  for (const Point& s : samples) theta.push_back(project_to_boundary(domain, s).theta);
  if (closed) theta.push_back(theta.front());

  // Over a symmetric normal interval the curvature term in the area element
  // (1 - t kappa) integrates to zero, leaving 2 delta times the arc length.
  const GaussLegendre<double> gl(8);
  double length = 0.0;
  double prev = theta.front();
  for (std::size_t i = 1; i < theta.size(); ++i) {
    double step = theta[i] - theta[i - 1];
    step = std::remainder(step, kTwoPi);
    const double a = prev;
    for (int q = 0; q < gl.size(); ++q) {
      length += std::abs(step) * gl.weights(q) * domain.tangent(a + step * gl.nodes(q)).norm();
    }
    prev += step;
  }
  return 2.0 * delta * length;
}

}  // namespace isofem

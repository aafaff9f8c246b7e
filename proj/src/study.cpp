#include "isofem/study.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#ifndef ISOFEM_VERSION
#define ISOFEM_VERSION "unknown"
#endif

namespace isofem {

namespace {

std::string format_csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json config_json(const StudyConfig& c) {
  return {{"study", to_string(c.kind)}, {"domain", c.domain},           {"k", c.k},
          {"levels", c.levels},         {"h0", c.h0},                   {"L", c.stride_ratio},
          {"solver_tol", c.solver_tol}, {"quad_degree", c.quadrature_degree}, {"seed", c.seed},
          {"z", {c.z.x(), c.z.y()}}};
}

nlohmann::json hypothesis_json(const HypothesisReport& r) {
  return {{"conforming", r.conforming},
          {"shape_regular", r.shape_regular},
          {"quasi_uniform", r.quasi_uniform},
          {"nodes_close", r.nodes_close},
          {"jacobian_positive", r.jacobian_positive},
          {"boundary_on_order", r.boundary_on_order},
          {"shape_regularity", r.shape_regularity},
          {"quasi_uniformity", r.quasi_uniformity},
          {"h4_constant", r.h4_constant},
          {"h6_constants", r.h6_constants},
          {"min_jacobian", r.min_jacobian},
          {"min_jacobian_ratio", r.min_jacobian_ratio},
          {"h8_sup_distance", r.h8_sup_distance},
          {"h8_expected", r.h8_expected},
          {"h8_ratio", r.h8_ratio()}};
}

nlohmann::json green_json(const GreenDiagnostics& d) {
  nlohmann::json shells = nlohmann::json::array();
  for (const auto& s : d.shells) {
    shells.push_back({{"j", s.j},
                      {"d_j", s.d_j},
                      {"l2_grad", s.l2_grad},
                      {"weighted_h1", s.weighted_h1},
                      {"l2", s.l2},
                      {"weighted_l2", s.weighted_l2},
                      {"l1_grad", s.l1_grad},
                      {"measure", s.measure},
                      {"n_elements", s.n_elements}});
  }
  return {{"element", d.element},
          {"h", d.h},
          {"L", d.stride_ratio},
          {"d0", d.scales.d0},
          {"J", d.scales.levels},
          {"shells", shells},
          {"l1_grad_total", d.l1_grad_total},
          {"shell_l1_sum", d.shell_l1_sum()},
          {"l2_grad_total", d.l2_grad_total},
          {"l2_total", d.l2_total},
          {"weighted_h1_sum", d.weighted_h1_sum},
          {"weighted_l2_sum", d.weighted_l2_sum},
          {"g_h_at_z", d.g_h_at_z},
          {"g_h_at_z_positive", d.g_h_at_z > 0},
          {"accuracy_flags", d.accuracy_flags},
          {"solve_iterations", d.solve_iterations}};
}

// Random field on the space, uniform in [-1, 1] per coefficient.
Field random_field(const FeSpace& space, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector c(space.n_dofs());
  for (Index a = 0; a < c.size(); ++a) c(a) = u(rng);
  return Field(space, std::move(c));
}

void add_fits(StudyReport& report, const Table& table, const std::vector<std::string>& columns,
              const std::string& prefix = "") {
  if (table.rows.size() < 2) return;
  const auto h = table.column("h");
  for (const auto& name : columns) {
    try {
      report.fits.emplace_back(prefix + name, fit_order(h, table.column(name)));
    } catch (const Error& e) {
      report.notes.push_back("no fit for " + prefix + name + ": " + e.what());
    }
  }
}

}  // namespace

const char* to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::Poisson: return "poisson";
    case StudyKind::Interpolation: return "interpolation";
    case StudyKind::Green: return "green";
    case StudyKind::Hypotheses: return "hypotheses";
    case StudyKind::Control: return "control";
  }
  return "?";
}

StudyKind parse_study_kind(const std::string& name) {
  for (StudyKind k : {StudyKind::Poisson, StudyKind::Interpolation, StudyKind::Green, StudyKind::Hypotheses,
                      StudyKind::Control}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown study '" + name + "'");
}

void StudyConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (levels < 2 || levels > 8) fail("--levels must be in [2, 8]");
  if (!(h0 > 0) || h0 / std::ldexp(1.0, levels) < 1e-3) fail("need h0 / 2^levels >= 1e-3");
  if (k < 1 || k > 3) fail("--k must be 1, 2 or 3");
  if (!(solver_tol >= 1e-14 && solver_tol <= 1e-6)) fail("--solver-tol must be in [1e-14, 1e-6]");
  if (quadrature_degree != -1 && (quadrature_degree < 1 || quadrature_degree > kMaxQuadratureDegree)) {
    fail("--quad-degree must be in [1, 30]");
  }
  if (!(stride_ratio >= 1.0)) fail("--L must be >= 1");
  if (out.empty()) fail("--out is required");
  const Domain d = Domain::parse(domain);
  const bool needs_solution =
      kind == StudyKind::Poisson || kind == StudyKind::Control || kind == StudyKind::Interpolation;
  if (needs_solution && d.kind() == Domain::Kind::Star) fail("no manufactured solution on star domains");
  if (kind == StudyKind::Green) {
    if (d.kind() != Domain::Kind::Disk) fail("the green study needs a disk domain");
    if (!d.contains(z)) fail("z must lie inside the domain");
  }
  if (h0 > 4.0 * d.tubular_radius()) fail("h0 too large for the boundary curvature");
}

OrderFit fit_order(std::span<const double> h, std::span<const double> error) {
  if (h.size() != error.size() || h.size() < 2) {
    throw Error(ErrorCode::DegenerateInput, "fit_order needs at least two (h, error) rows");
  }
  const std::size_t n = h.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(error[i] > 0) || !(h[i] > 0)) throw Error(ErrorCode::DegenerateInput, "errors and h must be positive");
    x[i] = std::log(h[i]);
    y[i] = std::log(error[i]);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw Error(ErrorCode::DegenerateInput, "all h values coincide");
  OrderFit fit;
  fit.slope = sxy / sxx;
  for (std::size_t i = 0; i < n; ++i) {
    fit.residual = std::max(fit.residual, std::abs(y[i] - (my + fit.slope * (x[i] - mx))));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) fit.pair_orders.push_back((y[i] - y[i + 1]) / (x[i] - x[i + 1]));
  return fit;
}

std::size_t Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw Error(ErrorCode::InvalidArgument, "no column '" + name + "'");
}

std::vector<double> Table::column(const std::string& name) const {
  const std::size_t c = column_index(name);
  std::vector<double> out;
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

std::string Table::csv() const {
  std::ostringstream s;
  for (std::size_t i = 0; i < columns.size(); ++i) s << (i ? "," : "") << columns[i];
  s << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << format_csv_number(row[i]);
    s << '\n';
  }
  return s.str();
}

const OrderFit* StudyReport::fit(const std::string& name) const {
  for (const auto& [n, f] : fits)
    if (n == name) return &f;
  return nullptr;
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  StudyReport report;
  report.config = config;
  report.version = ISOFEM_VERSION;
  report.timestamp = utc_timestamp();
  if (config.k == 1) {
    report.notes.push_back(
        "k = 1 runs for contrast only: the pointwise rate h^{k+1} is established for quadratic or higher-order "
        "elements (k >= 2); for k = 1 a logarithmic factor is expected.");
  }

  const Domain domain = Domain::parse(config.domain);
  const int qdeg = config.quadrature_degree;
  std::mt19937_64 rng(config.seed);
  std::optional<ManufacturedProblem> problem;
  if (config.kind == StudyKind::Poisson || config.kind == StudyKind::Control ||
      config.kind == StudyKind::Interpolation) {
    problem = manufactured_problem(domain);
  }

  Table zero_boundary;
  switch (config.kind) {
    case StudyKind::Poisson:
    case StudyKind::Control:
    case StudyKind::Interpolation:
      report.table.columns = kConvergenceColumns;
      zero_boundary.columns = kConvergenceColumns;
      break;
    case StudyKind::Hypotheses:
      report.table.columns = {"h",          "n_elements",  "n_dofs",           "shape_regularity",
                              "quasi_uniformity", "h4_constant", "h6_max",       "min_jacobian",
                              "min_jacobian_ratio", "h8_sup_distance", "h8_expected", "h8_ratio",
                              "wall_time"};
      break;
    case StudyKind::Green:
      report.table.columns = {"h",           "n_elements",  "n_dofs",      "l1_grad",
                              "weighted_h1", "weighted_l2", "solve_iters", "wall_time"};
      break;
  }

  for (int level = 0; level < config.levels; ++level) {
    LevelStatus status;
    status.h_target = config.level_h(level);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const StraightTriangulation tri = triangulate(domain, status.h_target);
      CurveOptions options;
      options.curve_boundary = config.kind != StudyKind::Control;
      const FeSpace space(curve_mesh(tri, domain, config.k, options));
      const CurvedMesh& mesh = space.mesh();
      const double h = mesh.h();
      nlohmann::json detail = {{"level", level}, {"h_target", status.h_target}, {"h", h}};

      switch (config.kind) {
        case StudyKind::Poisson:
        case StudyKind::Control: {
          const SparseMatrix a = assemble_stiffness(space, qdeg);
          const LinearSystem system = apply_dirichlet(a, assemble_load(space, problem->forcing, qdeg), space);
          SolveStats stats;
          const Field u = solve(system, config.solver_tol, &stats);
          const ErrorNorms e = error_norms(u, problem->solution, qdeg);
          detail["solver_residual"] = stats.residual_norm;
          detail["mesh_area"] = mesh_area(mesh);
          report.table.rows.push_back({h, static_cast<double>(mesh.n_elements()), static_cast<double>(space.n_dofs()),
                                       e.linf, e.l2, e.h1_semi, static_cast<double>(stats.iterations),
                                       seconds_since(t0)});
          break;
        }
        case StudyKind::Interpolation: {
          const ErrorNorms full = error_norms(interpolate(space, problem->solution.value), problem->solution, qdeg);
          const ErrorNorms zero =
              error_norms(interpolate_zero_boundary(space, problem->solution.value), problem->solution, qdeg);
          // Lemma-type ratio for one random field, maximized over boundary elements.
          const Field v = random_field(space, rng);
          double ratio = 0.0;
          for (Index t = 0; t < mesh.n_elements(); ++t)
            if (mesh.touches_boundary(t)) ratio = std::max(ratio, lemma31_ratio(v, t, 1, 2.0));
          detail["boundary_ratio_m1_p2"] = ratio;
          const double wall = seconds_since(t0);
          const double ne = static_cast<double>(mesh.n_elements()), nd = static_cast<double>(space.n_dofs());
          report.table.rows.push_back({h, ne, nd, full.linf, full.l2, full.h1_semi, 0.0, wall});
          zero_boundary.rows.push_back({h, ne, nd, zero.linf, zero.l2, zero.h1_semi, 0.0, wall});
          break;
        }
        case StudyKind::Hypotheses: {
          const HypothesisReport r = verify_hypotheses(mesh, domain);
          detail["hypotheses"] = hypothesis_json(r);
          double h6 = 0.0;
          for (double c : r.h6_constants) h6 = std::max(h6, c);
          report.table.rows.push_back({h, static_cast<double>(mesh.n_elements()), static_cast<double>(space.n_dofs()),
                                       r.shape_regularity, r.quasi_uniformity, r.h4_constant, h6, r.min_jacobian,
                                       r.min_jacobian_ratio, r.h8_sup_distance, r.h8_expected, r.h8_ratio(),
                                       seconds_since(t0)});
          break;
        }
        case StudyKind::Green: {
          const GreenDiagnostics d = green_diagnostics(space, domain, config.z, config.stride_ratio, config.solver_tol);
          detail["green"] = green_json(d);
          std::ostringstream csv;
          write_green_csv(d, csv);
          report.extra_csv.emplace_back("level" + std::to_string(level), csv.str());
          report.table.rows.push_back({h, static_cast<double>(mesh.n_elements()), static_cast<double>(space.n_dofs()),
                                       d.l1_grad_total, d.weighted_h1_sum, d.weighted_l2_sum,
                                       static_cast<double>(d.solve_iterations), seconds_since(t0)});
          if (d.accuracy_flags > 0) {
            report.notes.push_back("level " + std::to_string(level) + ": " + std::to_string(d.accuracy_flags) +
                                   " oracle evaluations flagged near-field accuracy loss");
          }
          break;
        }
      }
      report.details.push_back(detail);
    } catch (const Error& e) {
      status.ok = false;
      status.error = e.what();
      report.failed = true;
      report.details.push_back({{"level", level}, {"h_target", status.h_target}, {"error", status.error}});
    }
    report.levels.push_back(status);
  }

  switch (config.kind) {
    case StudyKind::Poisson:
    case StudyKind::Control:
      add_fits(report, report.table, {"linf", "l2", "h1_semi"});
      break;
    case StudyKind::Interpolation:
      add_fits(report, report.table, {"linf", "l2", "h1_semi"});
      add_fits(report, zero_boundary, {"linf", "l2", "h1_semi"}, "zero_boundary_");
      report.extra_csv.emplace_back("zero_boundary", zero_boundary.csv());
      break;
    case StudyKind::Green:
      add_fits(report, report.table, {"l1_grad", "weighted_h1", "weighted_l2"});
      break;
    case StudyKind::Hypotheses:
      break;
  }
  return report;
}

nlohmann::json report_json(const StudyReport& report) {
  nlohmann::json j;
  j["version"] = report.version;
  j["timestamp"] = report.timestamp;
  j["config"] = config_json(report.config);
  j["failed"] = report.failed;
  j["columns"] = report.table.columns;
  j["rows"] = report.table.rows;
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : report.levels) levels.push_back({{"h_target", l.h_target}, {"ok", l.ok}, {"error", l.error}});
  j["levels"] = levels;
  nlohmann::json fits = nlohmann::json::object();
  for (const auto& [name, f] : report.fits) {
    fits[name] = {{"slope", f.slope}, {"residual", f.residual}, {"pair_orders", f.pair_orders}};
  }
  j["fits"] = fits;
  j["details"] = report.details;
  j["notes"] = report.notes;
  return j;
}

std::vector<std::string> write_report(const StudyReport& report) {
  namespace fs = std::filesystem;
  const fs::path out(report.config.out);
  if (out.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
  }
  std::vector<std::string> written;
  auto write_file = [&](const fs::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    f << body;
    if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
    written.push_back(path.string());
  };
  auto stem_path = [&](const std::string& suffix, const std::string& ext) {
    fs::path p = out;
    p.replace_filename(out.stem().string() + (suffix.empty() ? "" : "_" + suffix) + ext);
    return p;
  };

  const std::string header =
      "# timestamp: " + report.timestamp + "\n# config: " + config_json(report.config).dump() + "\n";
  write_file(out, header + report.table.csv());
  for (const auto& [suffix, body] : report.extra_csv) write_file(stem_path(suffix, ".csv"), header + body);
  write_file(stem_path("", ".json"), report_json(report).dump(2) + "\n");
  return written;
}

std::string summary(const StudyReport& report) {
  std::ostringstream s;
  s << "isofem " << report.version << " study=" << to_string(report.config.kind) << " domain=" << report.config.domain
    << " k=" << report.config.k << " levels=" << report.config.levels << " h0=" << report.config.h0 << '\n';
  for (const auto& note : report.notes) s << "note: " << note << '\n';
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    if (!report.levels[i].ok) s << "level " << i << " FAILED: " << report.levels[i].error << '\n';
  }
  s << report.table.csv();
  for (const auto& [name, f] : report.fits) {
    s << "order " << name << ": " << format_csv_number(f.slope) << " (residual " << format_csv_number(f.residual)
      << ")\n";
  }
  s << (report.failed ? "study FAILED\n" : "study completed\n");
  return s.str();
}

}  // namespace isofem

#pragma once

#include "isofem/greens.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace isofem {

enum class StudyKind { Poisson, Interpolation, Green, Hypotheses, Control };

const char* to_string(StudyKind kind);
/// Throws InvalidArgument for unknown names.
StudyKind parse_study_kind(const std::string& name);

struct StudyConfig {
  StudyKind kind = StudyKind::Poisson;
  std::string domain = "disk:1";
  int k = 2;
  int levels = 4;
  double h0 = 0.4;
  double stride_ratio = 4.0;   // L, green only
  double solver_tol = 1e-12;
  int quadrature_degree = -1;  // -1: 2k+3
  std::uint64_t seed = 0;
  std::string out;
  Point z = Point(0.31, 0.17);  // green only

  /// Throws InvalidArgument describing the first violated constraint.
  void validate() const;
  double level_h(int level) const { return h0 / static_cast<double>(1 << level); }
};

struct OrderFit {
  double slope = 0.0;
  double residual = 0.0;               // max |log e_i - fitted line|
  std::vector<double> pair_orders;     // consecutive-level orders
};

/// Least-squares slope of log(error) against log(h). Needs two or more rows with
/// distinct h; throws DegenerateInput if an error is not positive.
OrderFit fit_order(std::span<const double> h, std::span<const double> error);

/// Column-named numeric table written as CSV. Rows of failed levels are absent.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column_index(const std::string& name) const;  // throws InvalidArgument
  std::vector<double> column(const std::string& name) const;
  /// Header line plus one line per row.
  std::string csv() const;
};

/// Columns of a convergence table.
inline const std::vector<std::string> kConvergenceColumns = {"h", "n_elements", "n_dofs", "linf",
                                                             "l2", "h1_semi", "solve_iters", "wall_time"};

struct LevelStatus {
  double h_target = 0.0;
  bool ok = true;
  std::string error;
};

struct StudyReport {
  StudyConfig config;
  std::string version;
  std::string timestamp;
  Table table;
  /// Auxiliary CSV files written next to the main CSV as <stem>_<suffix>.csv.
  std::vector<std::pair<std::string, std::string>> extra_csv;
  std::vector<LevelStatus> levels;
  std::vector<std::pair<std::string, OrderFit>> fits;
  /// Per-level study-specific data mirrored into the JSON report.
  nlohmann::json details = nlohmann::json::array();
  std::vector<std::string> notes;
  bool failed = false;

  const OrderFit* fit(const std::string& name) const;
};

/// Runs every level; a level that throws is recorded and marks the study failed.
/// Throws InvalidArgument for an invalid config.
StudyReport run_study(const StudyConfig& config);

/// Writes the CSV at config.out (comment lines `# timestamp: ...` and
/// `# config: ...` precede the header), auxiliary CSVs, and a sidecar JSON
/// with the same stem. Throws IoError. Returns the files written.
std::vector<std::string> write_report(const StudyReport& report);

nlohmann::json report_json(const StudyReport& report);

/// Human-readable summary for standard output.
std::string summary(const StudyReport& report);

}  // namespace isofem

#include "isofem/study.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

constexpr int kExitStudyFailure = 2;
constexpr int kExitConfigError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order isoparametric finite element studies on curved domains"};
  std::string study;
  isofem::StudyConfig config;
  app.add_option("study", study, "poisson | control | interpolation | hypotheses | green")->required();
  app.add_option("--domain", config.domain, "disk:R | ellipse:a,b | star:R0,eps,m")->required();
  app.add_option("--k", config.k, "polynomial degree (1, 2 or 3)")->required();
  app.add_option("--levels", config.levels, "number of mesh levels (2..8)")->required();
  app.add_option("--h0", config.h0, "coarsest target mesh size")->required();
  app.add_option("--L", config.stride_ratio, "dyadic stride ratio for the green study")->capture_default_str();
  app.add_option("--solver-tol", config.solver_tol, "relative CG residual tolerance")->capture_default_str();
  app.add_option("--quad-degree", config.quadrature_degree, "quadrature degree override (default 2k+3)");
  app.add_option("--seed", config.seed, "random seed")->capture_default_str();
  app.add_option("--out", config.out, "CSV output path; a .json sidecar is written next to it")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    config.kind = isofem::parse_study_kind(study);
    config.validate();
  } catch (const isofem::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    const isofem::StudyReport report = isofem::run_study(config);
    std::cout << isofem::summary(report);
    for (const auto& path : isofem::write_report(report)) std::cout << "wrote " << path << '\n';
    return report.failed ? kExitStudyFailure : 0;
  } catch (const isofem::Error& e) {
    std::cerr << "study error: " << e.what() << '\n';
    return kExitStudyFailure;
  }
}

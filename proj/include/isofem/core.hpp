#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace isofem {

// Spatial dimension of the physical domain. Kernels in this library are
// two-dimensional; types are written against kDim so the signatures carry it.
inline constexpr int kDim = 2;

using Index = std::int64_t;

template <typename Scalar>
using PointT = Eigen::Matrix<Scalar, kDim, 1>;
template <typename Scalar>
using JacobianT = Eigen::Matrix<Scalar, kDim, kDim>;

using Point = PointT<double>;
using Jacobian = JacobianT<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  NotInTubularNeighborhood,
  NoConvergence,
  OutOfRange,
  MeshGenerationFailed,
  CurvingFailed,
  NotInElement,
  UnsupportedDegree,
  PointNotInMesh,
  ElementNotOnBoundary,
  SingularJacobian,
  EmptyBoundary,
  IndefiniteMatrix,
  IllConditionedDualBasis,
  SingularArgument,
  NearFieldAccuracyLoss,
  DegenerateInput,
  InvalidArgument,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// 17 significant digits, enough to read a double back bit for bit.
inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace isofem

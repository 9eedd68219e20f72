#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace frvf {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// A file could not be read, written, or parsed.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical stage failed (rank deficiency, non-convergence).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace frvf

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace fconn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;
using MatrixList = std::vector<Matrix>;

inline constexpr double kPi = 3.14159265358979323846;

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation (non-positive price,
// out-of-range index, non-finite data).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A fit could not be carried out (singular design, empty intersection, ...).
class EstimationError : public Error {
 public:
  using Error::Error;
};

// An iterative solver stopped before meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double penalty, double residual)
      : Error(what), penalty_(penalty), residual_(residual) {}

  double penalty() const noexcept { return penalty_; }
  // KKT violation for the LASSO, duality gap for the graphical lasso.
  double residual() const noexcept { return residual_; }

 private:
  double penalty_;
  double residual_;
};

}  // namespace fconn

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace asi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Compressed sparse row storage; column indices are sorted and unique once
/// the matrix is compressed.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidMedium : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MemoryBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CFL violation; carries the largest admissible time step.
class CflViolation : public InvalidArgument {
 public:
  CflViolation(const std::string& what, double admissible_dt) : InvalidArgument(what), dt_(admissible_dt) {}
  double admissible_dt() const { return dt_; }

 private:
  double dt_;
};

}  // namespace asi

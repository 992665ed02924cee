#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid problem description, grid, or configuration value.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Numerical failure inside a solver (prox, regression, lattice).
class SolverError : public Error {
public:
  using Error::Error;
};

}  // namespace pvi

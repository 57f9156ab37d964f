#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace magpoly {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Base class of every error raised by the library. `kind()` is what the CLI
/// maps onto exit codes.
class Error : public std::runtime_error {
 public:
  enum class Kind { config, numeric, io };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(Kind::config, what) {}
};

class LimitError : public Error {
 public:
  explicit LimitError(const std::string& what) : Error(Kind::config, what) {}
};

class ClosureError : public Error {
 public:
  explicit ClosureError(const std::string& what) : Error(Kind::numeric, what) {}
};

class ConventionError : public Error {
 public:
  explicit ConventionError(const std::string& what) : Error(Kind::numeric, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(Kind::numeric, what) {}
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& what) : Error(Kind::numeric, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(Kind::io, what) {}
};

/// Selects between the OpenMP kernels and the serial reference path. Both
/// produce bit-identical results; the serial path is kept for tests and
/// benchmarks.
enum class Execution { serial, parallel };

}  // namespace magpoly

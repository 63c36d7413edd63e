#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjprox {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Array = Eigen::ArrayXd;
using Index = Eigen::Index;

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (dimension mismatch, non-finite
/// input, invalid parameter value).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Bad user-facing configuration (unknown function name, unknown config key,
/// malformed file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// No usable mass anywhere: every sample evaluated to +inf, or an integrand
/// is non-finite over the whole window.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// An analytic formula was asked for outside its admissible parameter range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine failed to make progress within its budget.
class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

inline bool all_finite(const Vector& v) {
  return v.allFinite();
}

/// count evenly spaced points covering [lo, hi] inclusive.
inline std::vector<double> linspace(double lo, double hi, int count) {
  require(count >= 1, "linspace: count must be >= 1");
  std::vector<double> out(static_cast<size_t>(count));
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double h = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) out[static_cast<size_t>(i)] = lo + h * i;
  out.back() = hi;
  return out;
}

}  // namespace hjprox

#pragma once

#include <cmath>
#include <limits>

#include "hjprox/core.hpp"

namespace hjprox {

namespace detail {

/// Max-stabilized weights proportional to exp(-alpha * z_i / delta), plus the
/// log of their unnormalized sum. Entries with z_i = +inf get weight exactly
/// zero. Throws DegenerateError when no entry is finite.
struct StableWeights {
  Array weights;        // normalized, sums to 1
  double logsumexp;     // log sum_i exp(-alpha * z_i / delta)
  double z_min;         // smallest finite entry
};

inline StableWeights stable_softmax(const Array& z, double alpha,
                                    double delta) {
  require(z.size() > 0, "softmax_weights: empty input");
  require(alpha > 0.0, "softmax_weights: alpha must be positive");
  require(delta > 0.0, "softmax_weights: delta must be positive");

  double z_min = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < z.size(); ++i) {
    const double v = z[i];
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
      throw ContractViolation("softmax_weights: entries must be finite or +inf");
    if (v < z_min) z_min = v;
  }
  if (!std::isfinite(z_min))
    throw DegenerateError("softmax_weights: all entries are +inf");

  // exp(-alpha (z_i - z_min) / delta) is in (0, 1]; no overflow possible.
  StableWeights out;
  out.z_min = z_min;
  out.weights = (-(alpha / delta) * (z - z_min)).exp();
  // Eigen's packet exp does not map -inf to an exact zero; +inf entries must
  // carry weight exactly 0 by contract.
  for (Index i = 0; i < z.size(); ++i)
    if (!std::isfinite(z[i])) out.weights[i] = 0.0;
  const double total = out.weights.sum();
  out.weights /= total;
  out.logsumexp = -(alpha / delta) * z_min + std::log(total);
  return out;
}

}  // namespace detail

/// Normalized weights softmax(-alpha * z / delta), computed with
/// max-subtraction so no intermediate over/underflows. +inf entries receive
/// weight exactly 0; all-+inf input is an error.
inline Array softmax_weights(const Array& z, double alpha, double delta) {
  return detail::stable_softmax(z, alpha, delta).weights;
}

/// log(sum_i exp(v_i)) with max-stabilization; -inf entries contribute zero.
inline double logsumexp(const Array& v) {
  require(v.size() > 0, "logsumexp: empty input");
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf, or an explicit +inf
  return m + std::log((v - m).exp().sum());
}

}  // namespace hjprox

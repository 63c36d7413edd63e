#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "hjprox/core.hpp"

namespace hjprox {

struct QuadratureResult {
  double u_value = 0.0;
  double u_gradient = 0.0;
  double prox = 0.0;
};

/// Deterministic 1-D reference for the smoothed envelope, its gradient, and
/// the smoothed proximal point at viscosity delta.
///
/// Substituting y = x + sigma*s with sigma = sqrt(delta*t) reduces the two
/// Gaussian integrals to
///     I0 = (2*pi)^(-1/2) * Int exp(L(s)) ds,
///     I1 = (2*pi)^(-1/2) * Int s * exp(L(s)) ds,
///     L(s) = -s^2/2 - f(x + sigma*s) / delta,
/// evaluated with composite Simpson refinement under max-subtraction in log
/// space; the panel count doubles until the value and the first-moment ratio
/// move by less than 1e-9 relative, targeting ~1e-8 overall accuracy.
///
/// The window starts at |s| <= 10 (the width of the plain Gaussian factor) and
/// doubles whenever the integrand still carries weight near an edge: for
/// small delta the mass sits around the proximal point, which can lie many
/// sampling widths away from x, so a fixed 10-sigma window would clip it.
inline QuadratureResult quadrature_reference_1d(
    double x, double t, const std::function<double(double)>& f, double delta) {
  require(t > 0.0, "quadrature_reference_1d: t must be positive");
  require(delta > 0.0, "quadrature_reference_1d: delta must be positive");
  require(std::isfinite(x), "quadrature_reference_1d: x must be finite");

  const double sigma = std::sqrt(delta * t);
  const double inf = std::numeric_limits<double>::infinity();

  auto log_integrand = [&](double s) {
    const double fv = f(x + sigma * s);
    if (std::isnan(fv)) throw ContractViolation("quadrature: f returned NaN");
    if (fv == inf) return -inf;
    return -0.5 * s * s - fv / delta;
  };

  double log_i0 = 0.0;
  double ratio = 0.0;
  std::vector<double> logs;

  double half_width = 10.0;
  for (int expansion = 0;; ++expansion, half_width *= 2.0) {
    if (expansion > 14)
      throw NonConvergenceError(
          "quadrature_reference_1d: integrand mass keeps escaping the window");

    // Keep the starting node spacing roughly constant as the window grows.
    const Index start_panels = static_cast<Index>(
        std::min(1024.0 * std::max(1.0, half_width / 10.0), 65536.0));
    bool edge_heavy = false;
    bool converged = false;
    double prev_log_i0 = 0.0, prev_ratio = 0.0;
    bool have_prev = false;

    for (Index panels = start_panels; panels <= (Index{1} << 22);
         panels *= 2) {
      const Index nodes = 2 * panels + 1;
      const double h = half_width / static_cast<double>(panels);
      logs.assign(static_cast<size_t>(nodes), -inf);
      double max_log = -inf;
      for (Index i = 0; i < nodes; ++i) {
        const double s = -half_width + h * static_cast<double>(i);
        const double L = log_integrand(s);
        logs[static_cast<size_t>(i)] = L;
        if (L > max_log) max_log = L;
      }
      if (!std::isfinite(max_log))
        throw DegenerateError(
            "quadrature_reference_1d: integrand non-finite over the window");

      // Any visible weight within the outer 1% of nodes means the window is
      // clipping mass (exp(-46) ~ 1e-20 relative).
      const Index margin = std::max<Index>(nodes / 100, 3);
      double edge_max = -inf;
      for (Index i = 0; i < margin; ++i) {
        edge_max = std::max(edge_max, logs[static_cast<size_t>(i)]);
        edge_max =
            std::max(edge_max, logs[static_cast<size_t>(nodes - 1 - i)]);
      }
      if (edge_max > max_log - 46.0) {
        edge_heavy = true;
        break;
      }

      // Simpson weights 1,4,2,...,4,1 on exp(L - max_log).
      double sum0 = 0.0, sum1 = 0.0;
      for (Index i = 0; i < nodes; ++i) {
        const double L = logs[static_cast<size_t>(i)];
        if (L == -inf) continue;
        const double w =
            (i == 0 || i == nodes - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double g = w * std::exp(L - max_log);
        const double s = -half_width + h * static_cast<double>(i);
        sum0 += g;
        sum1 += g * s;
      }
      if (sum0 <= 0.0)
        throw DegenerateError("quadrature_reference_1d: zero integral mass");

      log_i0 = max_log + std::log(sum0 * h / 3.0);
      ratio = sum1 / sum0;

      if (have_prev && std::abs(log_i0 - prev_log_i0) <= 1e-9 &&
          std::abs(ratio - prev_ratio) <= 1e-9 * (1.0 + std::abs(ratio))) {
        converged = true;
        break;
      }
      prev_log_i0 = log_i0;
      prev_ratio = ratio;
      have_prev = true;
    }

    if (converged) break;
    if (!edge_heavy) break;  // refinement budget exhausted; accept best value
  }

  QuadratureResult out;
  out.u_value = -delta * (log_i0 - 0.5 * std::log(2.0 * std::numbers::pi));
  out.prox = x + sigma * ratio;
  out.u_gradient = (x - out.prox) / t;
  return out;
}

}  // namespace hjprox

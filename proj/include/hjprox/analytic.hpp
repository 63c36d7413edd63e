#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "hjprox/core.hpp"
#include "hjprox/oracle.hpp"

namespace hjprox {

/// Elementwise soft threshold sign(x) * max(0, |x| - thr); the proximal map
/// of thr * ||.||_1.
inline double shrink(double x, double thr) {
  require(thr >= 0.0, "shrink: threshold must be nonnegative");
  return std::copysign(std::max(0.0, std::abs(x) - thr), x);
}

inline Vector shrink(const Vector& x, double thr) {
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = shrink(x[i], thr);
  return out;
}

/// Proximal of f(z) = ||z||^2 + b' z. Stationarity 2z + b + (z - x)/t = 0
/// gives z = (x - t b) / (1 + 2 t).
inline Vector prox_quadratic_linear(const Vector& x, double t,
                                    const Vector& b) {
  require(t > 0.0, "prox_quadratic_linear: t must be positive");
  require(x.size() == b.size(), "prox_quadratic_linear: dimension mismatch");
  return (x - t * b) / (1.0 + 2.0 * t);
}

/// Proximal of f(z) = -sum_i log(z_i): the positive root of
/// z^2 - x z - t = 0 per component.
inline Vector prox_log_barrier(const Vector& x, double t) {
  require(t > 0.0, "prox_log_barrier: t must be positive");
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i)
    out[i] = 0.5 * (x[i] + std::sqrt(x[i] * x[i] + 4.0 * t));
  return out;
}

/// Proximal of f(z) = z^2 - log(z): the positive root of
/// (1 + 2t) z^2 - x z - t = 0.
inline double prox_quad_minus_log(double x, double t) {
  require(t > 0.0, "prox_quad_minus_log: t must be positive");
  const double a = 1.0 + 2.0 * t;
  return (x + std::sqrt(x * x + 4.0 * t * a)) / (2.0 * a);
}

// ---------------------------------------------------------------------------
// Closed-form envelopes.

/// Envelope of ||.||_1: the separable Huber sum.
inline double envelope_l1(const Vector& x, double t) {
  require(t > 0.0, "envelope_l1: t must be positive");
  double u = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    u += (a <= t) ? a * a / (2.0 * t) : a - 0.5 * t;
  }
  return u;
}

/// Envelope of -||.||_1: -||x||_1 - n t / 2.
inline double envelope_neg_l1(const Vector& x, double t) {
  require(t > 0.0, "envelope_neg_l1: t must be positive");
  return -x.lpNorm<1>() - 0.5 * t * static_cast<double>(x.size());
}

/// Envelope of -a ||.||^2 / 2: -a ||x||^2 / (2 (1 - a t)), valid for t < 1/a.
inline double envelope_neg_quadratic(const Vector& x, double t, double a) {
  require(a > 0.0, "envelope_neg_quadratic: a must be positive");
  if (!(t > 0.0 && t < 1.0 / a))
    throw DomainError("envelope_neg_quadratic: requires 0 < t < 1/a");
  return -a * x.squaredNorm() / (2.0 * (1.0 - a * t));
}

/// Envelope value by plugging a known proximal point into the objective.
inline double envelope_from_prox(const std::function<double(const Vector&)>& f,
                                 const Vector& prox_point, const Vector& x,
                                 double t) {
  return f(prox_point) + (prox_point - x).squaredNorm() / (2.0 * t);
}

/// Closed-form envelope lookup used by tests and the sweep experiment.
/// Supported names: neg_l1, neg_quadratic (with parameter a), l1_huber.
inline double envelope_analytic(const std::string& name, const Vector& x,
                                double t, double a = 1.0) {
  if (name == "neg_l1") return envelope_neg_l1(x, t);
  if (name == "neg_quadratic") return envelope_neg_quadratic(x, t, a);
  if (name == "l1_huber") return envelope_l1(x, t);
  throw ConfigError("envelope_analytic: unknown name: " + name);
}

// ---------------------------------------------------------------------------
// Iterative proximal fallback.

struct ProxIterativeOptions {
  double step = 0.0;      // > 0: fixed step; otherwise auto step with Armijo
  int iters = 10000;
  double fd_step = 1e-6;  // central-difference step for the gradient
  double stop_tol = 1e-10;
};

namespace detail {

/// Gradient of f at z, by central differences when no gradient oracle is
/// supplied; all 2n probe points go through one batched evaluation.
inline Vector objective_gradient(
    FunctionOracle& oracle, const std::function<Vector(const Vector&)>& grad,
    const Vector& z, double h) {
  if (grad) return grad(z);
  const Index n = z.size();
  Matrix probes(n, 2 * n);
  for (Index j = 0; j < n; ++j) {
    probes.col(2 * j) = z;
    probes.col(2 * j)[j] += h;
    probes.col(2 * j + 1) = z;
    probes.col(2 * j + 1)[j] -= h;
  }
  const Vector vals = oracle.eval_batch(probes);
  Vector g(n);
  for (Index j = 0; j < n; ++j)
    g[j] = (vals[2 * j] - vals[2 * j + 1]) / (2.0 * h);
  return g;
}

/// Curvature scale of f probed at x by second differences; used for the
/// default step t / (1 + t * Lhat).
inline double probe_curvature(FunctionOracle& oracle, const Vector& x) {
  const Index n = x.size();
  const double h = 1e-4;
  Matrix probes(n, 2 * n + 1);
  probes.col(0) = x;
  for (Index j = 0; j < n; ++j) {
    probes.col(2 * j + 1) = x;
    probes.col(2 * j + 1)[j] += h;
    probes.col(2 * j + 2) = x;
    probes.col(2 * j + 2)[j] -= h;
  }
  const Vector vals = oracle.eval_batch(probes);
  double lhat = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double second =
        (vals[2 * j + 1] - 2.0 * vals[0] + vals[2 * j + 2]) / (h * h);
    if (std::isfinite(second)) lhat = std::max(lhat, std::abs(second));
  }
  return lhat;
}

}  // namespace detail

/// Gradient descent on f(z) + ||z - x||^2 / (2t), returning the last iterate.
///
/// With no explicit step, the base step is t / (1 + t * Lhat) with Lhat
/// probed at x, refined per iteration by Armijo backtracking; this handles
/// the kinked objectives the finite-difference gradient smooths out. A fixed
/// positive step runs plain descent and reports divergence after ten
/// consecutive objective increases.
inline Vector prox_iterative(const Vector& x, double t, FunctionOracle& oracle,
                             const std::function<Vector(const Vector&)>& grad =
                                 nullptr,
                             const ProxIterativeOptions& opts = {}) {
  require(t > 0.0, "prox_iterative: t must be positive");
  require(x.size() == oracle.dim(), "prox_iterative: dimension mismatch");

  auto phi = [&](const Vector& z) {
    return oracle.eval(z) + (z - x).squaredNorm() / (2.0 * t);
  };

  Vector z = x;
  double phi_z = phi(z);
  if (!std::isfinite(phi_z))
    throw ContractViolation("prox_iterative: objective not finite at start");

  const bool fixed_step = opts.step > 0.0;
  double base_step = opts.step;
  if (!fixed_step) {
    const double lhat = detail::probe_curvature(oracle, x);
    base_step = t / (1.0 + t * lhat);
  }

  int increases = 0;
  for (int k = 0; k < opts.iters; ++k) {
    Vector g = detail::objective_gradient(oracle, grad, z, opts.fd_step);
    g += (z - x) / t;

    Vector z_next;
    double phi_next;
    if (fixed_step) {
      z_next = z - opts.step * g;
      if (!all_finite(z_next))
        throw NonConvergenceError("prox_iterative: iterate diverged");
      phi_next = phi(z_next);
      if (phi_next > phi_z) {
        if (++increases >= 10)
          throw NonConvergenceError(
              "prox_iterative: objective increased for 10 consecutive "
              "iterations");
      } else {
        increases = 0;
      }
    } else {
      // Armijo backtracking from the base step.
      double s = base_step;
      const double slope = g.squaredNorm();
      bool accepted = false;
      for (int half = 0; half < 60; ++half) {
        z_next = z - s * g;
        phi_next = phi(z_next);
        if (std::isfinite(phi_next) && phi_next <= phi_z - 1e-4 * s * slope) {
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) return z;  // no acceptable step remains
    }

    const double move = (z_next - z).norm();
    z = std::move(z_next);
    phi_z = phi_next;
    if (move < opts.stop_tol) break;
  }
  return z;
}

}  // namespace hjprox

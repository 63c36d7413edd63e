#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hjprox/core.hpp"
#include "hjprox/oracle.hpp"
#include "hjprox/parallel.hpp"
#include "hjprox/rng.hpp"
#include "hjprox/softmax.hpp"

namespace hjprox {

/// Tunables of the sampled proximal estimator.
struct ProxParams {
  double t = 0.1;            // proximal step
  double delta = 0.1;        // smoothing / viscosity
  int num_samples = 1000;    // Gaussian samples per batch
  double alpha = 1.0;        // initial exponent scale, in (0, 1]
  double eps_underflow = 1e-12;
  int max_recursions = 64;
  std::uint64_t seed = 0;

  void validate() const {
    require(t > 0.0, "ProxParams: t must be positive");
    require(delta > 0.0, "ProxParams: delta must be positive");
    require(num_samples >= 1, "ProxParams: num_samples must be >= 1");
    require(alpha > 0.0 && alpha <= 1.0, "ProxParams: alpha must be in (0, 1]");
    require(eps_underflow > 0.0 && eps_underflow < 1.0,
            "ProxParams: eps_underflow must be in (0, 1)");
    require(max_recursions >= 1, "ProxParams: max_recursions must be >= 1");
  }
};

/// Proximal estimate plus the diagnostics needed to detect weight collapse
/// and to audit the stabilization path taken.
struct ProxResult {
  Vector estimate;
  double effective_alpha = 1.0;
  double applied_shift = 0.0;
  int recursion_count = 0;
  double ess = 0.0;          // effective sample size, 1 / sum w_i^2
  double weights_max = 0.0;
};

struct EnvelopeEstimate {
  double value = 0.0;
  Vector gradient;
  int num_samples_used = 0;
};

/// Stabilization did not settle within max_recursions; carries the state at
/// the point of failure.
class StabilizationError : public Error {
 public:
  StabilizationError(const std::string& msg, double alpha, double shift,
                     int recursions)
      : Error(msg),
        effective_alpha(alpha),
        applied_shift(shift),
        recursion_count(recursions) {}
  double effective_alpha;
  double applied_shift;
  int recursion_count;
};

namespace detail {

/// One settled sampling batch: samples, normalized weights, and the
/// hull-clamped weighted mean they induce. In value-only mode the weight and
/// mean fields stay empty and only the log-sum-exp is produced.
struct HjBatch {
  Matrix samples;      // dim x N
  Array values;        // raw oracle values; add applied_shift for the
                       // stabilized ones
  Array weights;
  Vector weighted_mean;
  double logsumexp = 0.0;  // of -alpha (values + shift) / delta
  double effective_alpha = 1.0;
  double applied_shift = 0.0;
  int recursion_count = 0;
  double ess = 0.0;
  double weights_max = 0.0;
};

/// Runs the sample / shift / rescale loop until a batch produces usable
/// weights. Each pass draws fresh samples; pass k is seeded with seed ^ k.
/// A pass whose smallest finite shifted value is negative restarts with the
/// shift raised until values are nonnegative; a pass where even the smallest
/// value's raw weight exp(-alpha z_min / delta) would underflow past eps
/// (every sample weight collapsing at once) restarts with alpha halved.
/// Keying the underflow test on z_min is what makes the rescaling terminate:
/// the largest sampled value grows like delta*t/alpha for growing f, so a
/// max-based test can halve alpha forever without ever passing.
inline HjBatch hj_sample(const Vector& x, FunctionOracle& oracle,
                         const ProxParams& p, bool value_only = false) {
  p.validate();
  require(x.size() == oracle.dim(), "hj_prox: x dimension mismatch");
  require(all_finite(x), "hj_prox: x must be finite");

  const Index dim = x.size();
  const Index n = p.num_samples;
  const double log_eps = std::log(p.eps_underflow);

  double alpha = p.alpha;
  double shift = 0.0;
  int level = 0;

  HjBatch out;
  for (;;) {
    if (level > p.max_recursions) {
      std::ostringstream msg;
      msg << "hj_prox: stabilization did not settle within "
          << p.max_recursions << " recursions (alpha=" << alpha
          << ", shift=" << shift << ")";
      throw StabilizationError(msg.str(), alpha, shift, level - 1);
    }

    Rng rng(p.seed ^ static_cast<std::uint64_t>(level));
    const double sigma = std::sqrt(p.delta * p.t / alpha);
    Matrix samples(dim, n);
    double* data = samples.data();
    for (Index j = 0; j < n; ++j) {
      const Index base = j * dim;
      for (Index i = 0; i < dim; ++i)
        data[base + i] = x[i] + sigma * rng.next_normal();
    }

    Array z = oracle.eval_batch(samples).array();

    double raw_min = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      const double v = z[j];
      if (v < raw_min) raw_min = v;  // +inf never becomes the min
    }
    if (!std::isfinite(raw_min))
      throw DegenerateError("hj_prox: every sample evaluated to +inf");

    const double z_min = raw_min + shift;  // smallest stabilized value
    if (z_min < 0.0) {
      shift += -z_min + p.eps_underflow;
      ++level;
      continue;
    }
    if (-alpha * z_min / p.delta <= log_eps) {
      alpha *= 0.5;
      ++level;
      continue;
    }

    out.effective_alpha = alpha;
    out.applied_shift = shift;
    out.recursion_count = level;

    // The stabilized exponent uses raw differences; the shift cancels.
    const double scale = -alpha / p.delta;
    if (value_only) {
      double total = (scale * (z - raw_min)).exp().sum();
      out.logsumexp = scale * z_min + std::log(total);
      return out;
    }

    Array weights = (scale * (z - raw_min)).exp();
    for (Index j = 0; j < n; ++j)
      if (!std::isfinite(z[j])) weights[j] = 0.0;  // packet exp(-inf) != 0
    const double total = weights.sum();
    weights /= total;

    out.samples = std::move(samples);
    out.values = std::move(z);
    out.weights = std::move(weights);
    out.logsumexp = scale * z_min + std::log(total);
    out.weights_max = out.weights.maxCoeff();
    out.ess = 1.0 / out.weights.square().sum();

    // Convex combination, clamped into the per-component sample bounding box
    // so the hull-containment guarantee survives floating point roundoff.
    out.weighted_mean = out.samples * out.weights.matrix();
    for (Index i = 0; i < dim; ++i) {
      const double lo = out.samples.row(i).minCoeff();
      const double hi = out.samples.row(i).maxCoeff();
      out.weighted_mean[i] = std::clamp(out.weighted_mean[i], lo, hi);
    }
    return out;
  }
}

inline ProxResult to_prox_result(HjBatch&& b) {
  ProxResult r;
  r.estimate = std::move(b.weighted_mean);
  r.effective_alpha = b.effective_alpha;
  r.applied_shift = b.applied_shift;
  r.recursion_count = b.recursion_count;
  r.ess = b.ess;
  r.weights_max = b.weights_max;
  return r;
}

/// Envelope value for the original (unshifted) function: the rescaled
/// log-mean-exp, divided by the effective alpha and with the applied shift
/// subtracted back out.
inline double envelope_value_of(const HjBatch& b, const ProxParams& p) {
  const double n = static_cast<double>(p.num_samples);
  return -(p.delta / b.effective_alpha) * (b.logsumexp - std::log(n)) -
         b.applied_shift;
}

}  // namespace detail

/// Sampled proximal point of `oracle` at x: the softmax-weighted mean of
/// Gaussian samples around x, with automatic shift/rescale stabilization.
inline ProxResult hj_prox(const Vector& x, FunctionOracle& oracle,
                          const ProxParams& p) {
  return detail::to_prox_result(detail::hj_sample(x, oracle, p));
}

/// Sampled envelope value (the smoothed minimum of f(z) + |z-x|^2 / 2t).
inline double envelope_value(const Vector& x, FunctionOracle& oracle,
                             const ProxParams& p) {
  return detail::envelope_value_of(
      detail::hj_sample(x, oracle, p, /*value_only=*/true), p);
}

/// Envelope value and gradient from one shared sample batch. The gradient is
/// (x - m) / t with m the weighted sample mean, so  x - t * gradient  equals
/// the proximal estimate from hj_prox with the same inputs.
inline EnvelopeEstimate envelope_gradient(const Vector& x,
                                          FunctionOracle& oracle,
                                          const ProxParams& p) {
  detail::HjBatch b = detail::hj_sample(x, oracle, p);
  EnvelopeEstimate e;
  e.value = detail::envelope_value_of(b, p);
  e.gradient = (x - b.weighted_mean) / p.t;
  e.num_samples_used = p.num_samples;
  return e;
}

/// Two-stage smoothed envelope for noisy oracles.
///
/// Stage 1 defines the surrogate g(y) = envelope value of f at y with
/// smoothing p.delta (a denoising pass over the oracle); stage 2 estimates
/// the envelope of g with smoothing delta2. Surrogate evaluations use
/// deterministically derived per-point seeds and a fixed-order reduction, so
/// the result is reproducible and independent of thread count.
inline EnvelopeEstimate noisy_envelope(const Vector& x, FunctionOracle& oracle,
                                       const ProxParams& p, double delta2) {
  p.validate();
  require(delta2 > 0.0, "noisy_envelope: delta2 must be positive");

  const std::uint64_t inner_base = derive_seed(p.seed, 0x5e0a11);
  auto offset = std::make_shared<std::atomic<std::uint64_t>>(0);
  FunctionOracle base = oracle;
  ProxParams inner = p;

  auto surrogate_fn = [base, inner, inner_base,
                       offset](const Matrix& pts) mutable -> Vector {
    const Index k = pts.cols();
    const std::uint64_t start = offset->fetch_add(static_cast<std::uint64_t>(k));
    Vector out(k);
    parallel_for(k, [&](Index j) {
      const std::uint64_t stream = start + static_cast<std::uint64_t>(j);
      FunctionOracle local = base.split(stream);
      ProxParams pj = inner;
      pj.seed = derive_seed(inner_base, stream);
      out[j] = envelope_value(pts.col(j), local, pj);
    });
    return out;
  };

  FunctionOracle surrogate(oracle.dim(), std::move(surrogate_fn), true,
                           oracle.name() + "+stage1");

  ProxParams stage2 = p;
  stage2.delta = delta2;
  detail::HjBatch b = detail::hj_sample(x, surrogate, stage2);
  EnvelopeEstimate e;
  e.value = detail::envelope_value_of(b, stage2);
  e.gradient = (x - b.weighted_mean) / p.t;
  e.num_samples_used = p.num_samples;
  return e;
}

}  // namespace hjprox

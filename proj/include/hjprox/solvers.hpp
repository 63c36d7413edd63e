#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <utility>

#include "hjprox/analytic.hpp"
#include "hjprox/core.hpp"
#include "hjprox/hj_prox.hpp"
#include "hjprox/oracle.hpp"
#include "hjprox/rng.hpp"

namespace hjprox {

/// ||A' A||_2 by power iteration with a fixed-seed start vector.
inline double spectral_norm_sq(const Matrix& A, double tol = 1e-10,
                               int max_iters = 10000) {
  require(A.rows() >= 1 && A.cols() >= 1, "spectral_norm_sq: empty matrix");
  Rng rng(0x5eed5eedULL);
  Vector v(A.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = rng.next_normal();
  v.normalize();

  double lambda = 0.0;
  for (int k = 0; k < max_iters; ++k) {
    Vector w = A.transpose() * (A * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double lambda_next = v.dot(w);
    v = w / norm;
    if (k > 0 && std::abs(lambda_next - lambda) <= tol * std::abs(lambda_next)) {
      return lambda_next;
    }
    lambda = lambda_next;
  }
  return lambda;
}

/// Least-squares instance with the cached step-size constant ||A'A||_2.
struct LinearProblem {
  Matrix A;
  Vector b;
  double lip = 0.0;

  static LinearProblem make(Matrix A, Vector b) {
    require(A.rows() == b.size(), "LinearProblem: A rows must match b");
    LinearProblem p;
    p.lip = spectral_norm_sq(A);
    p.A = std::move(A);
    p.b = std::move(b);
    return p;
  }
};

enum class ProxKind { Analytic, Iterative, Hj };

/// Pluggable proximal map consumed by the solvers, with optional diagnostics
/// passthrough (cumulative oracle calls, recursion count of the last apply).
struct ProxProvider {
  ProxKind kind = ProxKind::Analytic;
  std::function<Vector(const Vector&, double)> apply;
  std::function<std::uint64_t()> oracle_calls;  // may be empty
  std::function<int()> last_recursions;         // may be empty
};

/// Elementwise soft-threshold provider (the l1 proximal map).
inline ProxProvider shrink_provider() {
  ProxProvider p;
  p.kind = ProxKind::Analytic;
  p.apply = [](const Vector& v, double t) { return shrink(v, t); };
  return p;
}

inline ProxProvider identity_provider() {
  ProxProvider p;
  p.kind = ProxKind::Analytic;
  p.apply = [](const Vector& v, double) { return v; };
  return p;
}

/// Sampled proximal provider. Call k is seeded with params.seed ^ k so runs
/// are reproducible while every iteration sees fresh samples.
inline ProxProvider hj_provider(FunctionOracle oracle, ProxParams params) {
  auto oracle_state = std::make_shared<FunctionOracle>(std::move(oracle));
  auto counter = std::make_shared<std::uint64_t>(0);
  auto recursions = std::make_shared<int>(0);
  ProxProvider p;
  p.kind = ProxKind::Hj;
  p.apply = [oracle_state, params, counter, recursions](const Vector& v,
                                                        double t) {
    ProxParams pk = params;
    pk.t = t;
    pk.seed = params.seed ^ (*counter)++;
    ProxResult r = hj_prox(v, *oracle_state, pk);
    *recursions = r.recursion_count;
    return r.estimate;
  };
  p.oracle_calls = [oracle_state]() { return oracle_state->call_count(); };
  p.last_recursions = [recursions]() { return *recursions; };
  return p;
}

/// Gradient-descent proximal provider for oracles without a closed form.
inline ProxProvider iterative_provider(
    FunctionOracle oracle, std::function<Vector(const Vector&)> grad = nullptr,
    ProxIterativeOptions opts = {}) {
  auto oracle_state = std::make_shared<FunctionOracle>(std::move(oracle));
  ProxProvider p;
  p.kind = ProxKind::Iterative;
  p.apply = [oracle_state, grad, opts](const Vector& v, double t) {
    return prox_iterative(v, t, *oracle_state, grad, opts);
  };
  p.oracle_calls = [oracle_state]() { return oracle_state->call_count(); };
  return p;
}

/// Proximal map of z -> t * ||W z||_1 via splitting W z = s: exact
/// soft-threshold on s, one cached Cholesky solve in z per pass. The
/// factorization is reused while t is unchanged and the splitting variables
/// warm-start consecutive calls, which is the common case inside a solver
/// loop where v drifts slowly.
class WeightedL1Prox {
 public:
  explicit WeightedL1Prox(Matrix W, int max_iters = 300, double tol = 1e-12)
      : W_(std::move(W)),
        WtW_(W_.transpose() * W_),
        w_norm_(std::sqrt(spectral_norm_sq(W_))),
        max_iters_(max_iters),
        tol_(tol) {
    require(W_.rows() == W_.cols() && W_.rows() >= 1,
            "WeightedL1Prox: W must be square");
  }

  Vector apply(const Vector& v, double t) {
    require(t > 0.0, "WeightedL1Prox: t must be positive");
    require(v.size() == W_.cols(), "WeightedL1Prox: dimension mismatch");
    const Index n = W_.cols();
    if (t != t_cached_) {
      rho_ = 0.2 / (t * w_norm_);  // balances the 1/t and rho W'W blocks
      llt_.compute(Matrix(Matrix::Identity(n, n) / t + rho_ * WtW_));
      t_cached_ = t;
      s_.resize(0);
    }
    if (s_.size() == 0) {
      s_ = W_ * v;
      d_ = Vector::Zero(n);
    }
    Vector z = v;
    for (int j = 0; j < max_iters_; ++j) {
      z = llt_.solve(v / t + rho_ * (W_.transpose() * (s_ - d_)));
      const Vector Wz = W_ * z;
      const Vector s_prev = s_;
      s_ = shrink(Wz + d_, 1.0 / rho_);
      d_ += Wz - s_;
      const double primal = (Wz - s_).norm();
      const double dual = rho_ * (W_.transpose() * (s_ - s_prev)).norm();
      const double scale = std::max(1.0, s_.norm());
      if (primal <= tol_ * scale && dual <= tol_ * scale) break;
    }
    return z;
  }

 private:
  Matrix W_;
  Matrix WtW_;
  double w_norm_;
  int max_iters_;
  double tol_;
  double t_cached_ = -1.0;
  double rho_ = 0.0;
  Eigen::LLT<Matrix> llt_;
  Vector s_, d_;
};

/// Iterative provider specialized to f = ||W.||_1 (analysis form): the inner
/// solver converges to machine precision, unlike the generic
/// finite-difference descent.
inline ProxProvider weighted_l1_prox_provider(Matrix W, int max_iters = 300) {
  auto state = std::make_shared<WeightedL1Prox>(std::move(W), max_iters);
  ProxProvider p;
  p.kind = ProxKind::Iterative;
  p.apply = [state](const Vector& v, double t) { return state->apply(v, t); };
  return p;
}

/// Per-iteration solver record; index 0 holds the initial point.
struct SolverTrace {
  std::vector<Vector> iterates;        // filled only when requested
  std::vector<double> objective;
  std::vector<double> residual;        // ||A x - b||
  std::vector<double> rel_error;       // vs a reference solution, if given
  std::vector<std::uint64_t> oracle_calls;
  std::vector<std::int64_t> wall_ns;

  std::size_t size() const { return objective.size(); }
};

/// An iterate left the finite range; carries the trace recorded so far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, SolverTrace trace)
      : Error(msg), partial_trace(std::move(trace)) {}
  SolverTrace partial_trace;
};

namespace detail {

inline std::int64_t elapsed_ns(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace detail

struct IstaOptions {
  // Proximal threshold coefficient c in t = c * beta; a negative value means
  // "use lambda_reg", which keeps the proximal step consistent with the
  // recorded objective.
  double shrink_coeff = -1.0;
  bool keep_iterates = false;
};

/// Proximal-gradient iteration for  min 1/2 ||A x - b||^2 + lambda_reg ||x||_1
/// with step beta = 1 / ||A'A||_2:
///     x_{k+1} = prox(x_k - beta A'(A x_k - b), lambda_reg * beta).
inline SolverTrace ista(const LinearProblem& prob, double lambda_reg,
                        ProxProvider& prox, const Vector& x0, int iters,
                        const IstaOptions& opts = {}) {
  require(lambda_reg > 0.0, "ista: lambda_reg must be positive");
  require(x0.size() == prob.A.cols(), "ista: x0 dimension mismatch");
  require(iters >= 0, "ista: iters must be nonnegative");

  const double beta = 1.0 / prob.lip;
  const double prox_t =
      (opts.shrink_coeff > 0.0 ? opts.shrink_coeff : lambda_reg) * beta;

  auto objective = [&](const Vector& x) {
    return 0.5 * (prob.A * x - prob.b).squaredNorm() +
           lambda_reg * x.lpNorm<1>();
  };
  auto calls = [&]() -> std::uint64_t {
    return prox.oracle_calls ? prox.oracle_calls() : 0;
  };

  SolverTrace trace;
  const auto start = std::chrono::steady_clock::now();
  Vector x = x0;
  auto record = [&](const Vector& xk) {
    if (opts.keep_iterates) trace.iterates.push_back(xk);
    trace.objective.push_back(objective(xk));
    trace.residual.push_back((prob.A * xk - prob.b).norm());
    trace.oracle_calls.push_back(calls());
    trace.wall_ns.push_back(detail::elapsed_ns(start));
  };
  record(x);

  for (int k = 0; k < iters; ++k) {
    const Vector grad_step = x - beta * (prob.A.transpose() * (prob.A * x - prob.b));
    x = prox.apply(grad_step, prox_t);
    if (!all_finite(x))
      throw DivergenceError("ista: iterate diverged at iteration " +
                                std::to_string(k + 1),
                            std::move(trace));
    record(x);
  }
  return trace;
}

struct LmmOptions {
  Vector reference;        // nonempty: record rel_error against it
  bool keep_iterates = false;
};

/// Linearized method of multipliers for  min f(x) s.t. A x = b:
///     x_{k+1} = prox(x_k - t A'(u_k + lam (A x_k - b)), t)
///     u_{k+1} = u_k + lam (A x_{k+1} - b).
/// Requires t * lam * ||A'A||_2 < 1 for the noiseless theory; violations only
/// warn. The objective column is recorded through objective_oracle (counted
/// as ordinary oracle calls).
inline SolverTrace linearized_mm(const LinearProblem& prob,
                                 FunctionOracle& objective_oracle,
                                 ProxProvider& prox, double t, double lam,
                                 const Vector& x0, const Vector& u0, int iters,
                                 const LmmOptions& opts = {}) {
  require(t > 0.0 && lam > 0.0, "linearized_mm: t and lam must be positive");
  require(x0.size() == prob.A.cols(), "linearized_mm: x0 dimension mismatch");
  require(u0.size() == prob.A.rows(), "linearized_mm: u0 dimension mismatch");
  require(objective_oracle.dim() == x0.size(),
          "linearized_mm: oracle dimension mismatch");
  if (t * lam * prob.lip >= 1.0)
    std::fprintf(stderr,
                 "linearized_mm: warning: t*lam*||A'A|| = %.3g >= 1; "
                 "convergence is not guaranteed\n",
                 t * lam * prob.lip);

  const bool with_ref = opts.reference.size() > 0;
  const double ref_norm = with_ref ? opts.reference.norm() : 1.0;

  SolverTrace trace;
  const auto start = std::chrono::steady_clock::now();
  Vector x = x0;
  Vector u = u0;
  auto record = [&](const Vector& xk) {
    if (opts.keep_iterates) trace.iterates.push_back(xk);
    trace.objective.push_back(objective_oracle.eval(xk));
    trace.residual.push_back((prob.A * xk - prob.b).norm());
    if (with_ref)
      trace.rel_error.push_back((xk - opts.reference).norm() / ref_norm);
    trace.oracle_calls.push_back(objective_oracle.call_count());
    trace.wall_ns.push_back(detail::elapsed_ns(start));
  };
  record(x);

  for (int k = 0; k < iters; ++k) {
    const Vector v = x - t * (prob.A.transpose() *
                              (u + lam * (prob.A * x - prob.b)));
    x = prox.apply(v, t);
    if (!all_finite(x))
      throw DivergenceError("linearized_mm: iterate diverged at iteration " +
                                std::to_string(k + 1),
                            std::move(trace));
    u += lam * (prob.A * x - prob.b);
    record(x);
  }
  return trace;
}

struct GdOptions {
  Vector reference;  // nonempty: record rel_error against it
  std::function<double(const Vector&)> residual;  // defaults to 0
};

/// Plain gradient descent x_{k+1} = x_k - step * grad(x_k), with the supplied
/// objective recorded per iterate.
inline SolverTrace gradient_descent(
    const std::function<double(const Vector&)>& objective,
    const std::function<Vector(const Vector&)>& grad, const Vector& x0,
    double step, int iters, const GdOptions& opts = {}) {
  require(step > 0.0, "gradient_descent: step must be positive");
  require(iters >= 0, "gradient_descent: iters must be nonnegative");

  const bool with_ref = opts.reference.size() > 0;
  const double ref_norm = with_ref ? opts.reference.norm() : 1.0;

  SolverTrace trace;
  const auto start = std::chrono::steady_clock::now();
  Vector x = x0;
  auto record = [&](const Vector& xk) {
    trace.objective.push_back(objective(xk));
    trace.residual.push_back(opts.residual ? opts.residual(xk) : 0.0);
    if (with_ref)
      trace.rel_error.push_back((xk - opts.reference).norm() / ref_norm);
    trace.oracle_calls.push_back(0);
    trace.wall_ns.push_back(detail::elapsed_ns(start));
  };
  record(x);

  for (int k = 0; k < iters; ++k) {
    x -= step * grad(x);
    if (!all_finite(x))
      throw DivergenceError("gradient_descent: iterate diverged at iteration " +
                                std::to_string(k + 1),
                            std::move(trace));
    record(x);
  }
  return trace;
}

}  // namespace hjprox

#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "hjprox/core.hpp"
#include "hjprox/rng.hpp"

namespace hjprox {

/// Relative Gaussian noise attached to an oracle: each evaluation returns
/// (1 + e) * f(y) with a fresh e ~ N(0, sigma^2).
struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Black-box scalar function accessed strictly through batched evaluations.
///
/// Points are the columns of a dim x k matrix; the result holds one value per
/// column, each finite or +inf. A cumulative call counter (shared across
/// copies) tracks how many points have ever been evaluated, so experiments
/// can report oracle-call budgets.
///
/// Deterministic oracles may be evaluated concurrently. A stochastic oracle
/// owns its noise stream and must be confined to one logical consumer;
/// concurrent use requires independently seeded instances.
class FunctionOracle {
 public:
  using BatchFn = std::function<Vector(const Matrix&)>;
  using SplitFn = std::function<FunctionOracle(std::uint64_t)>;

  FunctionOracle() = default;
  FunctionOracle(Index dim, BatchFn fn, bool stochastic, std::string name)
      : dim_(dim),
        fn_(std::move(fn)),
        stochastic_(stochastic),
        calls_(std::make_shared<std::atomic<std::uint64_t>>(0)),
        name_(std::move(name)) {}

  Index dim() const { return dim_; }
  bool is_stochastic() const { return stochastic_; }
  const std::string& name() const { return name_; }
  std::uint64_t call_count() const { return calls_->load(); }

  /// Independently seeded instance for concurrent use. Deterministic oracles
  /// return a plain copy; stochastic ones re-derive their noise stream from
  /// the given stream id. The call counter stays shared.
  FunctionOracle split(std::uint64_t stream) const {
    FunctionOracle child = splitter_ ? splitter_(stream) : *this;
    child.calls_ = calls_;
    return child;
  }

  void set_splitter(SplitFn splitter) { splitter_ = std::move(splitter); }

  Vector eval_batch(const Matrix& points) {
    require(points.rows() == dim_, "eval_batch: dimension mismatch");
    require(points.allFinite(), "eval_batch: non-finite component in input");
    Vector values = fn_(points);
    require(values.size() == points.cols(),
            "eval_batch: oracle returned wrong batch size");
    for (Index i = 0; i < values.size(); ++i) {
      if (std::isnan(values[i]) ||
          values[i] == -std::numeric_limits<double>::infinity())
        throw ContractViolation("eval_batch: oracle produced NaN or -inf");
    }
    calls_->fetch_add(static_cast<std::uint64_t>(points.cols()));
    return values;
  }

  double eval(const Vector& x) { return eval_batch(x)(0); }

 private:
  Index dim_ = 0;
  BatchFn fn_;
  bool stochastic_ = false;
  std::shared_ptr<std::atomic<std::uint64_t>> calls_;
  std::string name_;
  SplitFn splitter_;
};

/// Wraps a deterministic oracle with per-point relative Gaussian noise.
/// sigma = 0 reproduces the base oracle exactly. Non-finite base values pass
/// through unchanged.
inline FunctionOracle make_noisy(const FunctionOracle& base, NoiseSpec noise) {
  require(!base.is_stochastic(), "make_noisy: base oracle must be deterministic");
  require(noise.sigma >= 0.0, "make_noisy: sigma must be nonnegative");
  auto rng = std::make_shared<Rng>(noise.seed);
  FunctionOracle b = base;
  const double sigma = noise.sigma;
  auto fn = [b, rng, sigma](const Matrix& pts) mutable -> Vector {
    Vector v = b.eval_batch(pts);
    for (Index i = 0; i < v.size(); ++i) {
      const double eps = sigma * rng->next_normal();
      if (std::isfinite(v[i])) v[i] *= (1.0 + eps);
    }
    return v;
  };
  FunctionOracle out(base.dim(), std::move(fn), true, base.name() + "+noise");
  out.set_splitter([base, noise](std::uint64_t stream) {
    return make_noisy(base, NoiseSpec{noise.sigma,
                                      derive_seed(noise.seed, stream)});
  });
  return out;
}

inline FunctionOracle shift_oracle(const FunctionOracle& o, double c) {
  FunctionOracle b = o;
  auto fn = [b, c](const Matrix& pts) mutable -> Vector {
    return Vector(b.eval_batch(pts).array() + c);
  };
  FunctionOracle out(o.dim(), std::move(fn), o.is_stochastic(), o.name());
  out.set_splitter([o, c](std::uint64_t stream) {
    return shift_oracle(o.split(stream), c);
  });
  return out;
}

inline FunctionOracle scale_oracle(const FunctionOracle& o, double a) {
  require(a > 0.0, "scale_oracle: factor must be positive");
  FunctionOracle b = o;
  auto fn = [b, a](const Matrix& pts) mutable -> Vector {
    return Vector(a * b.eval_batch(pts).array());
  };
  FunctionOracle out(o.dim(), std::move(fn), o.is_stochastic(), o.name());
  out.set_splitter([o, a](std::uint64_t stream) {
    return scale_oracle(o.split(stream), a);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Builtin test functions.

inline FunctionOracle l1_oracle(Index dim) {
  return FunctionOracle(
      dim, [](const Matrix& p) { return Vector(p.cwiseAbs().colwise().sum()); },
      false, "l1");
}

/// f(y) = ||y||^2 + b' y
inline FunctionOracle quadratic_linear_oracle(Vector b) {
  const Index dim = b.size();
  require(dim >= 1, "quadratic_linear: b must be nonempty");
  require(all_finite(b), "quadratic_linear: b must be finite");
  return FunctionOracle(
      dim,
      [b](const Matrix& p) {
        return Vector(p.colwise().squaredNorm().transpose() +
                      (b.transpose() * p).transpose());
      },
      false, "quadratic_linear");
}

/// f(y) = -sum_i log(y_i); +inf outside the positive orthant.
inline FunctionOracle log_barrier_oracle(Index dim) {
  return FunctionOracle(
      dim,
      [](const Matrix& p) {
        Vector out(p.cols());
        for (Index j = 0; j < p.cols(); ++j) {
          if ((p.col(j).array() <= 0.0).any())
            out[j] = std::numeric_limits<double>::infinity();
          else
            out[j] = -p.col(j).array().log().sum();
        }
        return out;
      },
      false, "log_barrier");
}

inline FunctionOracle neg_l1_oracle(Index dim) {
  return FunctionOracle(
      dim,
      [](const Matrix& p) { return Vector(-p.cwiseAbs().colwise().sum()); },
      false, "neg_l1");
}

/// f(y) = -a ||y||^2 / 2
inline FunctionOracle neg_quadratic_oracle(Index dim, double a) {
  require(a > 0.0, "neg_quadratic: a must be positive");
  return FunctionOracle(
      dim,
      [a](const Matrix& p) {
        return Vector(-0.5 * a * p.colwise().squaredNorm().transpose().array());
      },
      false, "neg_quadratic");
}

/// f(y) = ||y||^2 - sum_i log(y_i); +inf outside the positive orthant.
inline FunctionOracle quad_minus_log_oracle(Index dim) {
  return FunctionOracle(
      dim,
      [](const Matrix& p) {
        Vector out(p.cols());
        for (Index j = 0; j < p.cols(); ++j) {
          if ((p.col(j).array() <= 0.0).any())
            out[j] = std::numeric_limits<double>::infinity();
          else
            out[j] = p.col(j).squaredNorm() - p.col(j).array().log().sum();
        }
        return out;
      },
      false, "quad_minus_log");
}

/// f(y) = ||W y||_1
inline FunctionOracle weighted_l1_oracle(Matrix W) {
  require(W.rows() == W.cols() && W.rows() >= 1,
          "weighted_l1: W must be square");
  require(W.allFinite(), "weighted_l1: W must be finite");
  const Index dim = W.cols();
  return FunctionOracle(
      dim,
      [W](const Matrix& p) {
        return Vector((W * p).cwiseAbs().colwise().sum());
      },
      false, "weighted_l1");
}

inline FunctionOracle constant_oracle(Index dim, double c) {
  return FunctionOracle(
      dim, [c](const Matrix& p) { return Vector(Vector::Constant(p.cols(), c)); },
      false, "constant");
}

/// Parameters for builtin_oracle; only the fields a given name needs are read.
struct BuiltinParams {
  double a = 1.0;
  Vector b;
  Matrix W;
};

inline FunctionOracle builtin_oracle(const std::string& name,
                                     const BuiltinParams& params, Index dim) {
  if (name == "l1") return l1_oracle(dim);
  if (name == "quadratic_linear") {
    Vector b = params.b.size() > 0 ? params.b : Vector(Vector::Ones(dim));
    return quadratic_linear_oracle(std::move(b));
  }
  if (name == "log_barrier") return log_barrier_oracle(dim);
  if (name == "neg_l1") return neg_l1_oracle(dim);
  if (name == "neg_quadratic") return neg_quadratic_oracle(dim, params.a);
  if (name == "quad_minus_log") return quad_minus_log_oracle(dim);
  if (name == "weighted_l1") {
    Matrix W = params.W.size() > 0 ? params.W
                                   : Matrix(Matrix::Identity(dim, dim));
    return weighted_l1_oracle(std::move(W));
  }
  if (name == "zero") return constant_oracle(dim, 0.0);
  throw ConfigError("unknown builtin function: " + name);
}

}  // namespace hjprox

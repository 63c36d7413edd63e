// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and runtime budgets are fixed in code; seeds are fixed
// so every run checks the same draws.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hjprox/hjprox.hpp"

namespace {

using namespace hjprox;
using Clock = std::chrono::steady_clock;

struct Failure {
  std::string what;
};

struct Checker {
  std::ostringstream log;
  int failures = 0;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ++failures;
      log << "      " << what << "\n";
    }
  }
  template <typename T>
  void expect_le(T value, T bound, const std::string& what) {
    if (!(value <= bound)) {
      ++failures;
      log << "      " << what << ": " << value << " > " << bound << "\n";
    }
  }
};

double median_of(std::vector<double> v) { return quantile(std::move(v), 0.5); }

// ---------------------------------------------------------------------------
// 1. Softmax / estimator algebra.

void criterion_1(Checker& c) {
  Rng rng(1001);
  // weight normalization and nonnegativity across spreads, with +inf entries
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 2 + int(rng.next_unit() * 64);
    Array z(n);
    const double scale = std::pow(10.0, 6.0 * rng.next_unit() - 2.0);
    for (int i = 0; i < n; ++i) z[i] = scale * (rng.next_unit() - 0.4);
    if (rep % 4 == 0) z[n - 1] = std::numeric_limits<double>::infinity();
    const Array w = softmax_weights(z, 0.25 + rng.next_unit() * 0.75,
                                    0.001 + rng.next_unit());
    c.expect_le(std::abs(w.sum() - 1.0), 1e-12, "weight normalization");
    c.expect(w.minCoeff() >= 0.0, "weight nonnegativity");
  }

  // exact shift invariance on exactly representable shifts
  for (double shift : {1.0, -3.0, 100.0, 0.125, -2048.5}) {
    Array z(8);
    for (int i = 0; i < 8; ++i) z[i] = std::floor(rng.next_unit() * 256.0) / 32.0;
    const Array w0 = softmax_weights(z, 0.8, 0.03);
    const Array w1 = softmax_weights(Array(z + shift), 0.8, 0.03);
    bool exact = true;
    for (int i = 0; i < 8; ++i) exact = exact && (w0[i] == w1[i]);
    c.expect(exact, "softmax shift invariance must be exact");
  }

  // hull containment on the internal batch
  {
    auto l1 = l1_oracle(3);
    ProxParams p;
    p.t = 0.1;
    p.delta = 0.1;
    p.num_samples = 2000;
    p.seed = 7;
    const Vector x = (Vector(3) << 2.0, -1.0, 0.3).finished();
    const auto batch = detail::hj_sample(x, l1, p);
    for (Index i = 0; i < 3; ++i) {
      c.expect(batch.weighted_mean[i] >= batch.samples.row(i).minCoeff() &&
                   batch.weighted_mean[i] <= batch.samples.row(i).maxCoeff(),
               "hull containment");
    }
  }

  // proximal identity: estimate == x - t * envelope gradient, per component
  {
    struct Case {
      FunctionOracle oracle;
      Vector x;
      double t;
    };
    std::vector<Case> cases;
    cases.push_back({l1_oracle(3), (Vector(3) << 1.0, -2.0, 0.5).finished(), 0.1});
    cases.push_back({neg_l1_oracle(2), (Vector(2) << 0.7, -1.2).finished(), 0.1});
    cases.push_back({quadratic_linear_oracle(Vector::Ones(4)),
                     (Vector(4) << 0.2, -0.1, 0.4, 0.0).finished(), 0.5});
    for (auto& cs : cases) {
      ProxParams p;
      p.t = cs.t;
      p.delta = 0.1;
      p.num_samples = 5000;
      p.seed = 99;
      const ProxResult r = hj_prox(cs.x, cs.oracle, p);
      const EnvelopeEstimate e = envelope_gradient(cs.x, cs.oracle, p);
      c.expect_le((cs.x - cs.t * e.gradient - r.estimate).lpNorm<Eigen::Infinity>(),
                  1e-12, "prox identity x - t grad");
    }
  }

  // bit-exact seed determinism
  {
    auto l1 = l1_oracle(2);
    ProxParams p;
    p.t = 0.1;
    p.delta = 0.05;
    p.num_samples = 3000;
    p.seed = 31;
    const Vector x = (Vector(2) << 3.0, -1.5).finished();
    const ProxResult a = hj_prox(x, l1, p);
    const ProxResult b = hj_prox(x, l1, p);
    c.expect((a.estimate - b.estimate).norm() == 0.0 && a.ess == b.ess &&
                 a.weights_max == b.weights_max,
             "seed determinism must be bit-exact");
  }
}

// ---------------------------------------------------------------------------
// 2. Vanishing-viscosity convergence against the quadrature reference.

void criterion_2(Checker& c) {
  struct Fn {
    const char* name;
    std::function<double(double)> f;
    std::function<double(double)> prox;  // analytic/derived, at t = 0.1
    std::vector<double> points;
  };
  const double t = 0.1;
  std::vector<Fn> fns;
  fns.push_back({"abs", [](double y) { return std::abs(y); },
                 [t](double y) { return shrink(y, t); },
                 {-3.0, -1.5, 0.5, 1.5, 3.0}});
  fns.push_back({"quad+lin", [](double y) { return y * y + y; },
                 [t](double y) { return (y - t) / (1.0 + 2.0 * t); },
                 {-3.0, -1.0, 0.0, 1.0, 3.0}});
  fns.push_back({"quad-log",
                 [](double y) {
                   return y > 0.0 ? y * y - std::log(y)
                                  : std::numeric_limits<double>::infinity();
                 },
                 [t](double y) { return prox_quad_minus_log(y, t); },
                 {0.5, 1.0, 1.5, 2.0, 3.0}});

  const std::vector<double> deltas = {1.0, 0.3, 0.1, 0.03, 0.01};
  for (const auto& fn : fns) {
    for (double x : fn.points) {
      double prev = std::numeric_limits<double>::infinity();
      double last = 0.0;
      for (double delta : deltas) {
        const auto q = quadrature_reference_1d(x, t, fn.f, delta);
        const double err = std::abs(q.prox - fn.prox(x));
        std::ostringstream what;
        what << fn.name << " at x=" << x << ", delta=" << delta;
        c.expect(err <= 1.1 * prev + 1e-8,
                 "error not nonincreasing for " + what.str());
        prev = err;
        last = err;
      }
      std::ostringstream what;
      what << fn.name << " at x=" << x;
      c.expect_le(last, 1e-3, "error at delta=0.01 for " + what.str());
    }
  }
}

// ---------------------------------------------------------------------------
// 3. Monte Carlo consistency against the quadrature smoothed proximal.

void criterion_3(Checker& c) {
  struct Case {
    const char* name;
    FunctionOracle oracle;
    Vector x;
    double t;
    std::function<double(double)> f1d;  // per-coordinate integrand
    Vector lin;                         // per-coordinate linear term (quad)
  };
  const double delta = 0.1;
  std::vector<Case> cases;
  cases.push_back({"l1 dim1", l1_oracle(1), Vector::Constant(1, 2.0), 0.1,
                   [](double y) { return std::abs(y); }, Vector()});
  {
    Vector x5(5);
    x5 << 1.5, -2.0, 3.0, 1.2, -1.4;
    cases.push_back({"l1 dim5", l1_oracle(5), x5, 0.1,
                     [](double y) { return std::abs(y); }, Vector()});
  }
  cases.push_back({"quad dim1", quadratic_linear_oracle(Vector::Ones(1)),
                   Vector::Constant(1, -0.1), 0.5, nullptr, Vector::Ones(1)});
  {
    Vector x5(5);
    x5 << -0.3, -0.7, -0.2, -0.6, -0.4;
    cases.push_back({"quad dim5", quadratic_linear_oracle(Vector::Ones(5)), x5,
                     0.5, nullptr, Vector::Ones(5)});
  }

  for (auto& cs : cases) {
    // separable reference: per-coordinate smoothed proximal by quadrature
    Vector ref(cs.x.size());
    for (Index i = 0; i < cs.x.size(); ++i) {
      std::function<double(double)> fi = cs.f1d;
      if (!fi) {
        const double bi = cs.lin[i];
        fi = [bi](double y) { return y * y + bi * y; };
      }
      ref[i] = quadrature_reference_1d(cs.x[i], cs.t, fi, delta).prox;
    }

    std::vector<double> err_small, err_large;
    for (int seed = 0; seed < 30; ++seed) {
      for (int n : {100, 10000}) {
        ProxParams p;
        p.t = cs.t;
        p.delta = delta;
        p.num_samples = n;
        p.seed = derive_seed(3000 + seed, static_cast<std::uint64_t>(n));
        const ProxResult r = hj_prox(cs.x, cs.oracle, p);
        (n == 100 ? err_small : err_large)
            .push_back((r.estimate - ref).norm());
      }
    }
    const double med_small = median_of(err_small);
    const double med_large = median_of(err_large);
    std::ostringstream what;
    what << cs.name << ": median error N=100 (" << med_small
         << ") should be >= 2x N=10000 (" << med_large << ")";
    c.expect(med_large * 2.0 <= med_small, what.str());
  }
}

// ---------------------------------------------------------------------------
// 4. Analytic cross-checks via the iterative proximal solver.

void criterion_4(Checker& c) {
  {
    auto l1 = l1_oracle(1);
    for (double x : linspace(-2.0, 2.0, 20)) {
      const Vector z = prox_iterative(Vector::Constant(1, x), 0.1, l1);
      c.expect_le(std::abs(z[0] - shrink(x, 0.1)), 1e-6,
                  "iterative vs shrink at x=" + std::to_string(x));
    }
  }
  {
    auto ql = quadratic_linear_oracle(Vector::Ones(1));
    for (double x : linspace(-2.0, 2.0, 20)) {
      const Vector z = prox_iterative(Vector::Constant(1, x), 0.7, ql);
      const Vector want =
          prox_quadratic_linear(Vector::Constant(1, x), 0.7, Vector::Ones(1));
      c.expect_le(std::abs(z[0] - want[0]), 1e-6,
                  "iterative vs quadratic-linear at x=" + std::to_string(x));
    }
  }
  {
    auto lb = log_barrier_oracle(1);
    for (double x : linspace(0.2, 4.0, 20)) {
      const Vector z = prox_iterative(Vector::Constant(1, x), 0.5, lb);
      const Vector want = prox_log_barrier(Vector::Constant(1, x), 0.5);
      c.expect_le(std::abs(z[0] - want[0]), 1e-6,
                  "iterative vs log-barrier at x=" + std::to_string(x));
    }
  }
  // envelope finite differences against (x - prox)/t
  const double h = 1e-5;
  auto fd = [&](const std::string& name, double x, double t, double a) {
    return (envelope_analytic(name, Vector::Constant(1, x + h), t, a) -
            envelope_analytic(name, Vector::Constant(1, x - h), t, a)) /
           (2.0 * h);
  };
  for (double x : linspace(-1.9, 1.9, 13)) {
    if (std::abs(x) < 0.2) continue;  // keep FD windows off the kinks
    c.expect_le(std::abs(fd("neg_l1", x, 0.1, 1.0) -
                         (x - (x >= 0 ? x + 0.1 : x - 0.1)) / 0.1),
                1e-5, "neg_l1 envelope gradient at x=" + std::to_string(x));
    c.expect_le(std::abs(fd("neg_quadratic", x, 0.2, 1.0) -
                         (x - x / 0.8) / 0.2),
                1e-5, "neg_quadratic envelope gradient at x=" + std::to_string(x));
    c.expect_le(std::abs(fd("l1_huber", x, 0.1, 1.0) -
                         (x - shrink(x, 0.1)) / 0.1),
                1e-5, "l1 envelope gradient at x=" + std::to_string(x));
  }
}

// ---------------------------------------------------------------------------
// 5. Nonconvex envelope values against the closed forms.

void criterion_5(Checker& c) {
  const auto grid = linspace(-2.0, 2.0, 41);
  {
    auto oracle = neg_l1_oracle(1);
    double sup = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
      ProxParams p;
      p.t = 0.1;
      p.delta = 0.01;
      p.num_samples = 100000;
      p.seed = derive_seed(500, i);
      const double u =
          envelope_value(Vector::Constant(1, grid[i]), oracle, p);
      sup = std::max(sup,
                     std::abs(u - envelope_neg_l1(Vector::Constant(1, grid[i]),
                                                  0.1)));
    }
    c.expect_le(sup, 0.02, "neg_l1 envelope sup error");
  }
  {
    auto oracle = neg_quadratic_oracle(1, 1.0);
    double sup = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
      ProxParams p;
      p.t = 0.2;
      p.delta = 0.01;
      p.num_samples = 100000;
      p.seed = derive_seed(600, i);
      const double u =
          envelope_value(Vector::Constant(1, grid[i]), oracle, p);
      sup = std::max(
          sup, std::abs(u - envelope_neg_quadratic(
                                Vector::Constant(1, grid[i]), 0.2, 1.0)));
    }
    c.expect_le(sup, 0.02, "neg_quadratic envelope sup error");
  }
}

// ---------------------------------------------------------------------------
// 6. l1-regularized least squares at desk scale.

void criterion_6(Checker& c) {
  LinearProblem prob = gen_problem(1, 50, 100);
  const double lambda = 0.1;
  const int iters = 400;
  const Vector x0 = Vector::Zero(100);

  ProxProvider analytic = shrink_provider();
  const SolverTrace analytic_trace = ista(prob, lambda, analytic, x0, iters);

  auto lasso_obj = [&](const Vector& x) {
    return 0.5 * (prob.A * x - prob.b).squaredNorm() + lambda * x.lpNorm<1>();
  };
  auto ls_grad = [&](const Vector& x) {
    return Vector(prob.A.transpose() * (prob.A * x - prob.b));
  };
  const SolverTrace gd_trace =
      gradient_descent(lasso_obj, ls_grad, x0, 1.0 / prob.lip, iters);

  const auto traces =
      run_lasso_config(prob, lambda, {1.0, 1000}, 30, iters, 6001);
  std::vector<std::vector<double>> objectives;
  for (const auto& tr : traces) objectives.push_back(tr.objective);
  const SeriesSummary summary = summarize(objectives);

  double worst_rel = 0.0;
  for (int k = 100; k <= iters; ++k) {
    const double rel = std::abs(summary.mean[size_t(k)] -
                                analytic_trace.objective[size_t(k)]) /
                       analytic_trace.objective[size_t(k)];
    worst_rel = std::max(worst_rel, rel);
  }
  c.expect_le(worst_rel, 0.10,
              "sampled-prox mean objective vs analytic from iteration 100");
  c.expect(summary.mean.back() < gd_trace.objective.back(),
           "sampled-prox final objective must beat the no-prox baseline");
  c.expect(analytic_trace.objective.back() < gd_trace.objective.back(),
           "analytic final objective must beat the no-prox baseline");
}

// ---------------------------------------------------------------------------
// 7. Noisy constrained runs at desk scale.

void criterion_7(Checker& c) {
  const int n = 100, m = 50, trials = 30, iters = 300;
  const double sigma = 0.005;
  LinearProblem prob = gen_problem(derive_seed(7001, 1), m, n);
  const Matrix W = gen_matrix(derive_seed(7001, 2), n, n);
  const ReferenceSolution ref = solve_reference_weighted_l1(prob, W);
  c.expect(ref.residual <= 1e-8, "reference feasibility");
  c.expect(ref.certified, "reference optimality certificate");

  auto res_obj = [&](const Vector& x) {
    return 0.5 * (prob.A * x - prob.b).squaredNorm();
  };
  auto res_grad = [&](const Vector& x) {
    return Vector(prob.A.transpose() * (prob.A * x - prob.b));
  };
  GdOptions gd_opts;
  gd_opts.reference = ref.x;
  const SolverTrace gd = gradient_descent(res_obj, res_grad, Vector::Zero(n),
                                          1.0 / prob.lip, iters, gd_opts);
  const double gd_final = gd.rel_error.back();

  auto median_final = [&](const HjSweepPoint& pt, std::uint64_t seed) {
    const auto traces =
        run_lmm_config(prob, W, sigma, pt, trials, iters, seed, ref.x);
    std::vector<double> finals;
    for (const auto& tr : traces) finals.push_back(tr.rel_error.back());
    return median_of(finals);
  };

  const double err_d1 = median_final({1.0, 10 * n}, 7101);
  const double err_d10 = median_final({10.0, 10 * n}, 7102);
  const double err_d100 = median_final({100.0, 10 * n}, 7103);
  const double err_n_small = median_final({10.0, n / 10}, 7104);
  const double err_n_mid = median_final({10.0, n}, 7105);
  const double err_n_big = err_d10;  // shared configuration

  {
    std::ostringstream what;
    what << "sample-size ordering: N=10n (" << err_n_big << ") <= N=n ("
         << err_n_mid << ") <= N=n/10 (" << err_n_small << ")";
    c.expect(err_n_big <= err_n_mid && err_n_mid <= err_n_small, what.str());
  }
  {
    std::ostringstream what;
    what << "oversmoothing: delta=100 (" << err_d100
         << ") must be worse than delta=10 (" << err_d10 << ")";
    c.expect(err_d100 > err_d10, what.str());
  }
  for (auto [name, err] :
       {std::pair<const char*, double>{"delta=1", err_d1},
        {"delta=10", err_d10},
        {"delta=100", err_d100},
        {"N=n/10", err_n_small},
        {"N=n", err_n_mid}}) {
    std::ostringstream what;
    what << name << " median final rel_error (" << err
         << ") must beat gradient descent (" << gd_final << ")";
    c.expect(err < gd_final, what.str());
  }
}

// ---------------------------------------------------------------------------
// 8. Two-stage smoothing of a noisy oracle.

void criterion_8(Checker& c) {
  const auto grid = linspace(-2.0, 2.0, 101);
  const double t = 0.1;
  std::vector<double> errors(grid.size());
  FunctionOracle base = l1_oracle(1);
  // outer loop sequential: the two-stage estimator parallelizes internally
  for (size_t i = 0; i < grid.size(); ++i) {
    FunctionOracle noisy = make_noisy(
        base, NoiseSpec{0.05, derive_seed(800, static_cast<std::uint64_t>(i))});
    ProxParams p;
    p.t = t;
    p.delta = 0.1;
    p.num_samples = 10000;
    p.seed = derive_seed(801, static_cast<std::uint64_t>(i));
    const EnvelopeEstimate e =
        noisy_envelope(Vector::Constant(1, grid[i]), noisy, p, 0.01);
    errors[i] =
        std::abs(e.value - envelope_l1(Vector::Constant(1, grid[i]), t));
  }
  double sup = 0.0;
  for (double e : errors) sup = std::max(sup, e);
  std::ostringstream what;
  what << "two-stage envelope sup distance to the exact envelope (" << sup
       << ")";
  c.expect_le(sup, 0.1, what.str());
}

// ---------------------------------------------------------------------------
// 9. Stabilization under extreme scaling.

void criterion_9(Checker& c) {
  auto l1 = l1_oracle(1);
  auto scaled = scale_oracle(l1_oracle(1), 1e6);
  const Vector x = Vector::Constant(1, 3.0);

  ProxParams base;
  base.t = 0.1;
  base.delta = 1e-3;
  base.num_samples = 10000;
  base.max_recursions = 64;
  base.seed = 901;
  const ProxResult plain = hj_prox(x, l1, base);

  ProxParams big = base;
  big.t = 0.1 / 1e6;  // time rescaled so t*f matches the unscaled problem
  const ProxResult wide = hj_prox(x, scaled, big);

  c.expect(std::isfinite(wide.estimate[0]), "scaled run must stay finite");
  c.expect_le(wide.recursion_count, 64, "scaled run recursion budget");
  c.expect_le(std::abs(wide.estimate[0] - plain.estimate[0]), 0.05,
              "scaled estimate must match the unscaled run");
  c.expect_le(std::abs(wide.estimate[0] - 2.9), 0.05,
              "scaled estimate must match the soft threshold");
  c.expect(wide.effective_alpha < plain.effective_alpha,
           "scaling must engage extra rescaling");
}

struct Entry {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Checker&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Entry> entries = {
      {1, "softmax and estimator algebra", 5.0, criterion_1},
      {2, "vanishing-viscosity convergence (quadrature)", 30.0, criterion_2},
      {3, "Monte Carlo consistency vs quadrature", 60.0, criterion_3},
      {4, "analytic cross-checks (iterative prox, envelopes)", 10.0,
       criterion_4},
      {5, "nonconvex envelope values", 30.0, criterion_5},
      {6, "l1-regularized least squares parity", 180.0, criterion_6},
      {7, "noisy constrained runs", 600.0, criterion_7},
      {8, "noisy-oracle two-stage smoothing", 60.0, criterion_8},
      {9, "stabilization under extreme scaling", 10.0, criterion_9},
  };

  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& e : entries) {
    if (!only.empty() &&
        std::find(only.begin(), only.end(), e.id) == only.end())
      continue;
    Checker c;
    const auto start = Clock::now();
    try {
      e.run(c);
    } catch (const std::exception& ex) {
      c.expect(false, std::string("unexpected exception: ") + ex.what());
    }
    const double secs =
        std::chrono::duration<double>(Clock::now() - start).count();
    if (secs > e.budget_s) {
      c.expect(false, "runtime budget exceeded");
    }
    const bool ok = c.failures == 0;
    std::printf("[%s] %d. %s (%.1f s / budget %.0f s)\n", ok ? "PASS" : "FAIL",
                e.id, e.name, secs, e.budget_s);
    if (!ok) {
      std::fputs(c.log.str().c_str(), stdout);
      ++failed;
    }
    std::fflush(stdout);
  }
  if (failed == 0)
    std::printf("all %zu criteria passed\n", entries.size());
  else
    std::printf("%d criteria FAILED\n", failed);
  return failed;
}

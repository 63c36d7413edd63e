#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hjprox/analytic.hpp"
#include "hjprox/core.hpp"
#include "hjprox/csv.hpp"
#include "hjprox/hj_prox.hpp"
#include "hjprox/oracle.hpp"
#include "hjprox/parallel.hpp"
#include "hjprox/quadrature.hpp"
#include "hjprox/rng.hpp"
#include "hjprox/solvers.hpp"
#include "hjprox/svg.hpp"
#include "hjprox/version.hpp"

namespace hjprox {

enum class Family { EnvelopeSweep, Lasso, NoisyLmm };
enum class Scale { Desk, Paper };

/// Knobs shared by the experiment families. normalize() applies the
/// scale-dependent problem sizes.
struct ExperimentConfig {
  Family family = Family::EnvelopeSweep;
  Scale scale = Scale::Desk;
  int m = 0;                     // 0: derive from scale
  int n = 0;
  int trials = 30;
  int iters = 2000;
  std::uint64_t base_seed = 1;
  ProxParams prox;               // sample count / alpha / eps defaults
  double sigma = 0.005;          // oracle noise (lmm); sweep noisy panels use 0.05
  double lambda_reg = 0.1;
  double delta2 = 0.01;
  int grid_points = 101;
  std::filesystem::path out_dir = "out";

  void normalize() {
    if (m == 0 || n == 0) {
      if (family == Family::Lasso) {
        m = scale == Scale::Paper ? 500 : 50;
        n = scale == Scale::Paper ? 1000 : 100;
      } else {
        n = scale == Scale::Paper ? 1000 : 100;
        m = n / 2;
      }
    }
    if (scale == Scale::Paper)
      std::fprintf(stderr,
                   "warning: paper-scale run (m=%d, n=%d); this can take "
                   "hours on a small machine\n",
                   m, n);
  }
};

/// Standard-normal matrix, filled row-major from a seeded stream.
inline Matrix gen_matrix(std::uint64_t seed, Index rows, Index cols) {
  require(rows >= 1 && cols >= 1, "gen_matrix: empty shape");
  Rng rng(seed);
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = rng.next_normal();
  return out;
}

/// Gaussian least-squares instance: A, then b, from one seeded stream.
inline LinearProblem gen_problem(std::uint64_t seed, Index m, Index n) {
  Rng rng(seed);
  Matrix A(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = rng.next_normal();
  Vector b(m);
  for (Index i = 0; i < m; ++i) b[i] = rng.next_normal();
  return LinearProblem::make(std::move(A), std::move(b));
}

// ---------------------------------------------------------------------------
// Reference solution for  min ||W x||_1  s.t.  A x = b  (noiseless, full
// knowledge of W).

struct ReferenceSolution {
  Vector x;
  double residual = 0.0;          // ||A x - b|| of the returned point
  double objective_change = 0.0;  // relative objective drift at termination
  bool certified = false;         // dual certificate verified on the support
  int iters_used = 0;
};

namespace detail {

/// Tries to certify and sharpen a near-optimal point of
/// min ||w||_1 s.t. A~ w = b. Re-solves exactly on a candidate support and
/// accepts only when the dual certificate holds ((A~' nu) matches the support
/// signs and stays within [-1, 1] elsewhere). Returns true on success and
/// overwrites w with the certified optimum.
inline bool certify_basis_pursuit(const Matrix& At, const Vector& b,
                                  Vector& w) {
  const Index m = At.rows();
  const double w_max = w.cwiseAbs().maxCoeff();
  if (!(w_max > 0.0)) return false;

  for (double rel_thresh : {1e-7, 1e-5, 1e-3}) {
    std::vector<Index> support;
    for (Index i = 0; i < w.size(); ++i)
      if (std::abs(w[i]) > std::max(1e-9, rel_thresh * w_max))
        support.push_back(i);
    if (support.empty() || static_cast<Index>(support.size()) > m) continue;

    const Index s = static_cast<Index>(support.size());
    Matrix As(m, s);
    for (Index j = 0; j < s; ++j) As.col(j) = At.col(support[size_t(j)]);
    const Vector ws = Eigen::ColPivHouseholderQR<Matrix>(As).solve(b);
    if ((As * ws - b).norm() > 1e-10 * std::max(1.0, b.norm())) continue;

    Vector signs(s);
    bool sign_ok = true;
    for (Index j = 0; j < s; ++j) {
      signs[j] = ws[j] >= 0.0 ? 1.0 : -1.0;
      if (ws[j] * w[support[size_t(j)]] < 0.0) sign_ok = false;
    }
    if (!sign_ok) continue;

    const Vector nu = Eigen::ColPivHouseholderQR<Matrix>(Matrix(As.transpose()))
                          .solve(signs);
    if ((Matrix(As.transpose()) * nu - signs).lpNorm<Eigen::Infinity>() > 1e-8)
      continue;
    const Vector dual = At.transpose() * nu;
    bool bounded = true;
    for (Index i = 0; i < dual.size() && bounded; ++i) {
      if (!std::binary_search(support.begin(), support.end(), i) &&
          std::abs(dual[i]) > 1.0 + 1e-8)
        bounded = false;
    }
    if (!bounded) continue;

    w.setZero();
    for (Index j = 0; j < s; ++j) w[support[size_t(j)]] = ws[j];
    return true;
  }
  return false;
}

}  // namespace detail

/// Solves  min ||W x||_1  s.t.  A x = b  (noiseless, full knowledge of W) to
/// reference accuracy: the multiplier iteration in x with the exact
/// weighted-l1 proximal map, followed by a support polish in w = W x
/// coordinates that is only accepted under a verified dual certificate. A
/// certified result is optimal to machine precision; otherwise the iterate is
/// projected onto the feasible subspace and reported as-is.
inline ReferenceSolution solve_reference_weighted_l1(const LinearProblem& prob,
                                                     const Matrix& W,
                                                     int budget = 20000,
                                                     double target_residual =
                                                         1e-10) {
  require(W.rows() == W.cols() && W.cols() == prob.A.cols(),
          "reference: W shape mismatch");
  Eigen::PartialPivLU<Matrix> w_lu(W);
  // A W^-1 computed as (W^-T A^T)^T; needed for the certificate algebra.
  Eigen::PartialPivLU<Matrix> wt_lu(Matrix(W.transpose()));
  const Matrix At = wt_lu.solve(Matrix(prob.A.transpose())).transpose();

  const double t = 1.0 / prob.lip;
  const double lam = 0.9 / (t * prob.lip);  // t * lam * lip = 0.9
  WeightedL1Prox prox(W, 400, 1e-12);
  Vector x = Vector::Zero(prob.A.cols());
  Vector u = Vector::Zero(prob.A.rows());

  ReferenceSolution out;
  double prev_obj = std::numeric_limits<double>::infinity();
  int k = 0;
  for (; k < budget; ++k) {
    const Vector v =
        x - t * (prob.A.transpose() * (u + lam * (prob.A * x - prob.b)));
    x = prox.apply(v, t);
    u += lam * (prob.A * x - prob.b);
    if ((k + 1) % 100 == 0) {
      const double res = (prob.A * x - prob.b).norm();
      const double obj = (W * x).lpNorm<1>();
      out.objective_change =
          std::abs(obj - prev_obj) / std::max(1.0, std::abs(obj));
      prev_obj = obj;
      if (res <= target_residual && out.objective_change <= 1e-11) break;
    }
  }
  out.iters_used = std::min(k + 1, budget);

  Vector w = W * x;
  if (detail::certify_basis_pursuit(At, prob.b, w)) {
    out.certified = true;
    out.objective_change = 0.0;
    out.x = w_lu.solve(w);
  } else {
    // Feasibility fallback: least-norm correction onto {A x = b}.
    const Matrix gram = prob.A * prob.A.transpose();
    const Vector corr = gram.ldlt().solve(prob.A * x - prob.b);
    out.x = x - prob.A.transpose() * corr;
  }
  out.residual = (prob.A * out.x - prob.b).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Trace serialization and trial aggregation.

inline CsvTable trace_table(const SolverTrace& t, int trial) {
  CsvTable table;
  table.header = {"trial",     "iter",        "objective", "residual",
                  "rel_error", "oracle_calls", "wall_ns"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (size_t i = 0; i < t.size(); ++i) {
    table.rows.push_back(
        {static_cast<double>(trial), static_cast<double>(i), t.objective[i],
         t.residual[i], t.rel_error.empty() ? nan : t.rel_error[i],
         static_cast<double>(t.oracle_calls[i]),
         static_cast<double>(t.wall_ns[i])});
  }
  return table;
}

inline double quantile(std::vector<double> v, double q) {
  require(!v.empty(), "quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

struct SeriesSummary {
  std::vector<double> mean, median, q25, q75;
};

/// Per-index statistics across trials; all series must share one length.
inline SeriesSummary summarize(const std::vector<std::vector<double>>& series) {
  require(!series.empty(), "summarize: no trials");
  const size_t len = series.front().size();
  SeriesSummary s;
  s.mean.resize(len);
  s.median.resize(len);
  s.q25.resize(len);
  s.q75.resize(len);
  std::vector<double> column(series.size());
  for (size_t i = 0; i < len; ++i) {
    double acc = 0.0;
    for (size_t tr = 0; tr < series.size(); ++tr) {
      require(series[tr].size() == len, "summarize: ragged trials");
      column[tr] = series[tr][i];
      acc += column[tr];
    }
    s.mean[i] = acc / static_cast<double>(series.size());
    s.median[i] = quantile(column, 0.5);
    s.q25[i] = quantile(column, 0.25);
    s.q75[i] = quantile(column, 0.75);
  }
  return s;
}

inline CsvTable summary_table(const SeriesSummary& s) {
  CsvTable t;
  t.header = {"iter", "mean", "median", "q25", "q75"};
  for (size_t i = 0; i < s.mean.size(); ++i)
    t.rows.push_back({static_cast<double>(i), s.mean[i], s.median[i], s.q25[i],
                      s.q75[i]});
  return t;
}

namespace detail {

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline void append_common_manifest(
    std::vector<std::pair<std::string, std::string>>& m,
    const ExperimentConfig& cfg, const char* family) {
  m.emplace_back("family", family);
  m.emplace_back("scale", cfg.scale == Scale::Paper ? "paper" : "desk");
  m.emplace_back("m", std::to_string(cfg.m));
  m.emplace_back("n", std::to_string(cfg.n));
  m.emplace_back("trials", std::to_string(cfg.trials));
  m.emplace_back("iters", std::to_string(cfg.iters));
  m.emplace_back("base_seed", std::to_string(cfg.base_seed));
  m.emplace_back("samples", std::to_string(cfg.prox.num_samples));
  m.emplace_back("alpha", format_double(cfg.prox.alpha));
  m.emplace_back("eps_underflow", format_double(cfg.prox.eps_underflow));
  m.emplace_back("version", kVersion);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Envelope sweep (per-gridpoint comparison tables).

struct SweepFunction {
  std::string name;
  double t = 0.1;
  double grid_lo = -2.0, grid_hi = 2.0;
  std::function<double(double)> f;
  std::function<double(double)> u_exact;
  std::function<double(double)> prox_exact;
  FunctionOracle oracle;
};

inline std::vector<SweepFunction> sweep_functions() {
  std::vector<SweepFunction> fns;
  auto vec1 = [](double v) { return Vector::Constant(1, v); };

  fns.push_back({"l1", 0.1, -2.0, 2.0,
                 [](double y) { return std::abs(y); },
                 [vec1](double y) { return envelope_l1(vec1(y), 0.1); },
                 [](double y) { return shrink(y, 0.1); }, l1_oracle(1)});

  auto ql_f = [](double y) { return y * y + y; };
  fns.push_back({"quadratic_linear", 0.5, -2.0, 2.0, ql_f,
                 [ql_f, vec1](double y) {
                   const double z = (y - 0.5) / 2.0;  // (x - t b)/(1 + 2t)
                   return ql_f(z) + (z - y) * (z - y) / (2.0 * 0.5);
                 },
                 [](double y) { return (y - 0.5) / 2.0; },
                 quadratic_linear_oracle(Vector::Ones(1))});

  auto lb_f = [](double y) {
    return y > 0.0 ? -std::log(y) : std::numeric_limits<double>::infinity();
  };
  fns.push_back({"log_barrier", 2.0, 0.1, 4.0, lb_f,
                 [lb_f](double y) {
                   const double z = 0.5 * (y + std::sqrt(y * y + 8.0));
                   return lb_f(z) + (z - y) * (z - y) / (2.0 * 2.0);
                 },
                 [](double y) { return 0.5 * (y + std::sqrt(y * y + 8.0)); },
                 log_barrier_oracle(1)});

  fns.push_back({"neg_l1", 0.1, -2.0, 2.0,
                 [](double y) { return -std::abs(y); },
                 [vec1](double y) { return envelope_neg_l1(vec1(y), 0.1); },
                 [](double y) {
                   // minimizer of -|z| + (z-y)^2/(2t): y shifted t away from 0
                   return y >= 0.0 ? y + 0.1 : y - 0.1;
                 },
                 neg_l1_oracle(1)});

  fns.push_back({"neg_quadratic", 0.2, -2.0, 2.0,
                 [](double y) { return -0.5 * y * y; },
                 [vec1](double y) {
                   return envelope_neg_quadratic(vec1(y), 0.2, 1.0);
                 },
                 [](double y) { return y / (1.0 - 0.2); },
                 neg_quadratic_oracle(1, 1.0)});

  auto qml_f = [](double y) {
    return y > 0.0 ? y * y - std::log(y)
                   : std::numeric_limits<double>::infinity();
  };
  fns.push_back({"quad_minus_log", 0.5, 0.1, 4.0, qml_f,
                 [qml_f](double y) {
                   const double z = prox_quad_minus_log(y, 0.5);
                   return qml_f(z) + (z - y) * (z - y) / (2.0 * 0.5);
                 },
                 [](double y) { return prox_quad_minus_log(y, 0.5); },
                 quad_minus_log_oracle(1)});
  return fns;
}

/// Emits one row per grid point per function: exact envelope/proximal values
/// next to the sampled and quadrature estimates, plus noisy-oracle rows when
/// sigma > 0. Estimator failures leave NaN cells and the run continues.
inline std::filesystem::path run_envelope_sweep(ExperimentConfig cfg) {
  cfg.normalize();
  std::filesystem::create_directories(cfg.out_dir);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double sweep_sigma = 0.05;

  CsvTable table;
  table.header = {"function", "t",      "delta",      "delta2",
                  "x",        "f",      "u_exact",    "u_mc",
                  "u_quad",   "prox_exact", "prox_hj", "abs_err"};
  // The function column holds an index into the manifest's function list so
  // rows stay fully numeric.
  std::vector<std::pair<std::string, std::string>> manifest;
  detail::append_common_manifest(manifest, cfg, "envelope_sweep");
  manifest.emplace_back("noisy_sigma", format_double(sweep_sigma));
  manifest.emplace_back("noisy_delta", format_double(0.1));
  manifest.emplace_back("noisy_delta2", format_double(cfg.delta2));

  int errors = 0;
  auto fns = sweep_functions();
  for (size_t fi = 0; fi < fns.size(); ++fi) {
    auto& fn = fns[fi];
    manifest.emplace_back("function_" + std::to_string(fi), fn.name);
    const auto grid = linspace(fn.grid_lo, fn.grid_hi, cfg.grid_points);

    ProxParams p = cfg.prox;
    p.t = fn.t;

    std::vector<SvgSeries> chart(4);
    chart[0].label = "f";
    chart[1].label = "u exact";
    chart[2].label = "u sampled";
    chart[3].label = "u quadrature";

    for (size_t gi = 0; gi < grid.size(); ++gi) {
      const double x = grid[gi];
      const Vector xv = Vector::Constant(1, x);
      double u_mc = nan, u_quad = nan, prox_hj = nan;
      ProxParams prow = p;
      prow.seed = derive_seed(cfg.base_seed, fi * 10000 + gi);
      try {
        u_mc = envelope_value(xv, fn.oracle, prow);
        prox_hj = hj_prox(xv, fn.oracle, prow).estimate[0];
        u_quad = quadrature_reference_1d(x, fn.t, fn.f, prow.delta).u_value;
      } catch (const Error&) {
        ++errors;
      }
      const double px = fn.prox_exact(x);
      table.rows.push_back({static_cast<double>(fi), fn.t, prow.delta, 0.0, x,
                            fn.f(x), fn.u_exact(x), u_mc, u_quad, px, prox_hj,
                            std::abs(prox_hj - px)});
      chart[0].y.push_back(fn.f(x));
      chart[1].y.push_back(fn.u_exact(x));
      chart[2].y.push_back(u_mc);
      chart[3].y.push_back(u_quad);
    }

    // Noisy panels: two-stage smoothing over a relative-noise oracle.
    FunctionOracle noisy = make_noisy(
        fn.oracle, NoiseSpec{sweep_sigma, derive_seed(cfg.base_seed, 900 + fi)});
    ProxParams pn = p;
    pn.delta = 0.1;
    SvgSeries noisy_series{"u noisy (2-stage)", {}};
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      const double x = grid[gi];
      const Vector xv = Vector::Constant(1, x);
      double u_mc = nan, u_quad = nan, prox_hj = nan;
      ProxParams prow = pn;
      prow.seed = derive_seed(cfg.base_seed, 500000 + fi * 10000 + gi);
      try {
        u_mc = noisy_envelope(xv, noisy, prow, cfg.delta2).value;
        prox_hj = hj_prox(xv, noisy, prow).estimate[0];
        u_quad = quadrature_reference_1d(x, fn.t, fn.f, prow.delta).u_value;
      } catch (const Error&) {
        ++errors;
      }
      const double px = fn.prox_exact(x);
      table.rows.push_back({static_cast<double>(fi), fn.t, prow.delta,
                            cfg.delta2, x, fn.f(x), fn.u_exact(x), u_mc, u_quad,
                            px, prox_hj, std::abs(prox_hj - px)});
      noisy_series.y.push_back(u_mc);
    }
    chart.push_back(std::move(noisy_series));
    write_line_chart_svg(cfg.out_dir / ("envelope_" + fn.name + ".svg"),
                         fn.name + " (t=" + detail::short_num(fn.t) + ")",
                         chart);
  }

  write_csv(cfg.out_dir / "envelope_sweep.csv", table);
  std::uint64_t total_calls = 0;
  for (auto& fn : fns) total_calls += fn.oracle.call_count();
  manifest.emplace_back("total_oracle_calls", std::to_string(total_calls));
  manifest.emplace_back("row_errors", std::to_string(errors));
  const auto mpath = cfg.out_dir / "manifest.txt";
  write_manifest(mpath, manifest);
  return mpath;
}

// ---------------------------------------------------------------------------
// LASSO experiment.

struct HjSweepPoint {
  double delta;
  int num_samples;
};

/// One sampled-proximal configuration of the l1-regularized solver, repeated
/// over independently seeded trials (trials run concurrently).
inline std::vector<SolverTrace> run_lasso_config(const LinearProblem& prob,
                                                 double lambda_reg,
                                                 const HjSweepPoint& pt,
                                                 int trials, int iters,
                                                 std::uint64_t seed) {
  std::vector<SolverTrace> traces(static_cast<size_t>(trials));
  parallel_for(trials, [&](Index trial) {
    FunctionOracle oracle = l1_oracle(prob.A.cols());
    ProxParams params;
    params.delta = pt.delta;
    params.num_samples = pt.num_samples;
    params.seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
    ProxProvider provider = hj_provider(oracle, params);
    traces[static_cast<size_t>(trial)] =
        ista(prob, lambda_reg, provider, Vector::Zero(prob.A.cols()), iters);
  });
  return traces;
}

inline std::filesystem::path run_lasso_experiment(ExperimentConfig cfg) {
  cfg.normalize();
  std::filesystem::create_directories(cfg.out_dir);
  LinearProblem prob = gen_problem(cfg.base_seed, cfg.m, cfg.n);
  const Vector x0 = Vector::Zero(cfg.n);

  // Proximal-free baseline: descent on the smooth half only, recorded under
  // the full regularized objective.
  auto lasso_obj = [&](const Vector& x) {
    return 0.5 * (prob.A * x - prob.b).squaredNorm() +
           cfg.lambda_reg * x.lpNorm<1>();
  };
  auto ls_grad = [&](const Vector& x) {
    return Vector(prob.A.transpose() * (prob.A * x - prob.b));
  };

  ProxProvider analytic = shrink_provider();
  SolverTrace analytic_trace =
      ista(prob, cfg.lambda_reg, analytic, x0, cfg.iters);
  SolverTrace gd_trace =
      gradient_descent(lasso_obj, ls_grad, x0, 1.0 / prob.lip, cfg.iters);

  write_csv(cfg.out_dir / "analytic.csv", trace_table(analytic_trace, 0));
  write_csv(cfg.out_dir / "gradient_descent.csv", trace_table(gd_trace, 0));

  const std::vector<HjSweepPoint> sweep = {
      {0.1, 1000}, {1.0, 1000}, {10.0, 1000}, {1.0, 100}, {1.0, 10000}};

  std::vector<std::pair<std::string, std::string>> manifest;
  detail::append_common_manifest(manifest, cfg, "lasso");
  manifest.emplace_back("lambda_reg", format_double(cfg.lambda_reg));
  manifest.emplace_back("lip", format_double(prob.lip));

  std::vector<SvgSeries> chart;
  chart.push_back({"analytic", analytic_trace.objective});
  chart.push_back({"gradient descent", gd_trace.objective});

  std::uint64_t total_calls = 0;
  for (size_t ci = 0; ci < sweep.size(); ++ci) {
    const auto& pt = sweep[ci];
    const std::string tag = "hj_d" + detail::short_num(pt.delta) + "_N" +
                            std::to_string(pt.num_samples);
    auto traces = run_lasso_config(prob, cfg.lambda_reg, pt, cfg.trials,
                                   cfg.iters, derive_seed(cfg.base_seed, ci));
    std::vector<std::vector<double>> objectives;
    for (int tr = 0; tr < cfg.trials; ++tr) {
      const auto& trace = traces[static_cast<size_t>(tr)];
      char name[160];
      std::snprintf(name, sizeof(name), "%s_trial%02d.csv", tag.c_str(), tr);
      write_csv(cfg.out_dir / name, trace_table(trace, tr));
      objectives.push_back(trace.objective);
      total_calls += trace.oracle_calls.back();
    }
    const SeriesSummary summary = summarize(objectives);
    write_csv(cfg.out_dir / (tag + "_summary.csv"), summary_table(summary));
    chart.push_back({tag + " (mean)", summary.mean});
  }

  write_line_chart_svg(cfg.out_dir / "mean_curves.svg",
                       "l1-regularized least squares: objective vs iteration",
                       chart, /*log_y=*/true);
  manifest.emplace_back("total_oracle_calls", std::to_string(total_calls));
  const auto mpath = cfg.out_dir / "manifest.txt";
  write_manifest(mpath, manifest);
  return mpath;
}

// ---------------------------------------------------------------------------
// Noisy constrained experiment.

/// One sampled-proximal configuration of the multiplier method against the
/// noisy oracle; trials run concurrently with split noise streams.
inline std::vector<SolverTrace> run_lmm_config(const LinearProblem& prob,
                                               const Matrix& W, double sigma,
                                               const HjSweepPoint& pt,
                                               int trials, int iters,
                                               std::uint64_t seed,
                                               const Vector& reference) {
  const double t = 1.0 / prob.lip;
  const double lam = 0.5;
  std::vector<SolverTrace> traces(static_cast<size_t>(trials));
  parallel_for(trials, [&](Index trial) {
    FunctionOracle noisy = make_noisy(
        weighted_l1_oracle(W),
        NoiseSpec{sigma, derive_seed(seed, 7000 + static_cast<std::uint64_t>(
                                                     trial))});
    ProxParams params;
    params.delta = pt.delta;
    params.num_samples = pt.num_samples;
    params.seed = derive_seed(seed, static_cast<std::uint64_t>(trial));
    ProxProvider provider = hj_provider(noisy, params);
    LmmOptions opts;
    opts.reference = reference;
    traces[static_cast<size_t>(trial)] =
        linearized_mm(prob, noisy, provider, t, lam, Vector::Zero(prob.A.cols()),
                      Vector::Zero(prob.A.rows()), iters, opts);
  });
  return traces;
}

inline std::filesystem::path run_noisy_lmm_experiment(ExperimentConfig cfg) {
  cfg.normalize();
  std::filesystem::create_directories(cfg.out_dir);
  LinearProblem prob = gen_problem(derive_seed(cfg.base_seed, 1), cfg.m, cfg.n);
  const Matrix W = gen_matrix(derive_seed(cfg.base_seed, 2), cfg.n, cfg.n);

  const ReferenceSolution ref = solve_reference_weighted_l1(prob, W);

  std::vector<std::pair<std::string, std::string>> manifest;
  detail::append_common_manifest(manifest, cfg, "noisy_lmm");
  manifest.emplace_back("sigma", format_double(cfg.sigma));
  manifest.emplace_back("lip", format_double(prob.lip));
  manifest.emplace_back("reference_residual", format_double(ref.residual));
  manifest.emplace_back("reference_objective_change",
                        format_double(ref.objective_change));
  manifest.emplace_back("reference_iters", std::to_string(ref.iters_used));

  // Constraint-residual-only baseline.
  auto res_obj = [&](const Vector& x) {
    return 0.5 * (prob.A * x - prob.b).squaredNorm();
  };
  auto res_grad = [&](const Vector& x) {
    return Vector(prob.A.transpose() * (prob.A * x - prob.b));
  };
  GdOptions gd_opts;
  gd_opts.reference = ref.x;
  gd_opts.residual = [&](const Vector& x) { return (prob.A * x - prob.b).norm(); };
  SolverTrace gd_trace =
      gradient_descent(res_obj, res_grad, Vector::Zero(cfg.n), 1.0 / prob.lip,
                       cfg.iters, gd_opts);
  write_csv(cfg.out_dir / "gradient_descent.csv", trace_table(gd_trace, 0));

  const std::vector<HjSweepPoint> sweep = {{1.0, 10 * cfg.n},
                                           {10.0, 10 * cfg.n},
                                           {100.0, 10 * cfg.n},
                                           {10.0, std::max(1, cfg.n / 10)},
                                           {10.0, cfg.n}};

  std::vector<SvgSeries> chart;
  chart.push_back({"gradient descent", gd_trace.rel_error});

  std::uint64_t total_calls = 0;
  for (size_t ci = 0; ci < sweep.size(); ++ci) {
    const auto& pt = sweep[ci];
    const std::string tag = "hj_d" + detail::short_num(pt.delta) + "_N" +
                            std::to_string(pt.num_samples);
    auto traces =
        run_lmm_config(prob, W, cfg.sigma, pt, cfg.trials, cfg.iters,
                       derive_seed(cfg.base_seed, 100 + ci), ref.x);
    std::vector<std::vector<double>> rel_errors;
    for (int tr = 0; tr < cfg.trials; ++tr) {
      const auto& trace = traces[static_cast<size_t>(tr)];
      char name[160];
      std::snprintf(name, sizeof(name), "%s_trial%02d.csv", tag.c_str(), tr);
      write_csv(cfg.out_dir / name, trace_table(trace, tr));
      rel_errors.push_back(trace.rel_error);
      total_calls += trace.oracle_calls.back();
    }
    const SeriesSummary summary = summarize(rel_errors);
    write_csv(cfg.out_dir / (tag + "_summary.csv"), summary_table(summary));
    chart.push_back({tag + " (median)", summary.median});
  }

  write_line_chart_svg(cfg.out_dir / "mean_curves.svg",
                       "noisy constrained runs: relative error vs iteration",
                       chart, /*log_y=*/true);
  manifest.emplace_back("total_oracle_calls", std::to_string(total_calls));
  const auto mpath = cfg.out_dir / "manifest.txt";
  write_manifest(mpath, manifest);
  return mpath;
}

}  // namespace hjprox

// Command-line front end: proximal/envelope estimation and the experiment
// families, configurable through flags and an optional key=value file.
// Precedence: flags > config file > defaults. Exit codes: 0 success, 1 usage
// or configuration error, 2 runtime/estimator error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "hjprox/hjprox.hpp"

namespace {

using namespace hjprox;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "prox.t",       "prox.delta",   "prox.delta2", "prox.alpha",
      "prox.eps",     "prox.samples", "prox.max_recursions",
      "fn.name",      "fn.a",         "fn.b_csv",    "fn.w_csv",
      "fn.sigma",     "run.seed",     "run.trials",  "run.iters",
      "run.scale",    "run.out",      "run.m",       "run.n",
      "run.lambda",   "run.grid",     "run.grid_points"};
  return keys;
}

KeyValueConfig default_config() {
  KeyValueConfig d;
  d.set("prox.t", "0.1");
  d.set("prox.delta", "0.1");
  d.set("prox.delta2", "0.01");
  d.set("prox.alpha", "1.0");
  d.set("prox.eps", "1e-12");
  d.set("prox.samples", "1000");
  d.set("prox.max_recursions", "64");
  d.set("fn.name", "l1");
  d.set("fn.a", "1.0");
  d.set("fn.sigma", "0");
  d.set("run.seed", "1");
  d.set("run.trials", "30");
  d.set("run.iters", "2000");
  d.set("run.scale", "desk");
  d.set("run.out", "out");
  d.set("run.lambda", "0.1");
  d.set("run.grid_points", "101");
  return d;
}

struct FlagSet {
  CLI::App* cmd = nullptr;
  std::map<std::string, std::string> staged;  // key -> value (flags that were set)

  void add_double(const std::string& flag, const std::string& key,
                  const std::string& help) {
    auto holder = std::make_shared<double>(0.0);
    cmd->add_option_function<double>(
           flag,
           [this, key, holder](const double& v) {
             staged[key] = format_double(v);
           },
           help)
        ->expected(1);
  }
  void add_int(const std::string& flag, const std::string& key,
               const std::string& help) {
    cmd->add_option_function<long long>(
           flag,
           [this, key](const long long& v) { staged[key] = std::to_string(v); },
           help)
        ->expected(1);
  }
  void add_string(const std::string& flag, const std::string& key,
                  const std::string& help) {
    cmd->add_option_function<std::string>(
           flag, [this, key](const std::string& v) { staged[key] = v; }, help)
        ->expected(1);
  }
};

Vector parse_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      size_t pos = 0;
      vals.push_back(std::stod(field, &pos));
    } catch (const std::exception&) {
      throw ConfigError("--x: bad number '" + field + "'");
    }
  }
  if (vals.empty()) throw ConfigError("--x: empty vector");
  Vector x(static_cast<Index>(vals.size()));
  for (Index i = 0; i < x.size(); ++i) x[i] = vals[static_cast<size_t>(i)];
  require(all_finite(x), "--x: components must be finite");
  return x;
}

ProxParams prox_params_from(const KeyValueConfig& cfg) {
  ProxParams p;
  p.t = cfg.get_double("prox.t", p.t);
  p.delta = cfg.get_double("prox.delta", p.delta);
  p.num_samples = static_cast<int>(cfg.get_int("prox.samples", p.num_samples));
  p.alpha = cfg.get_double("prox.alpha", p.alpha);
  p.eps_underflow = cfg.get_double("prox.eps", p.eps_underflow);
  p.max_recursions =
      static_cast<int>(cfg.get_int("prox.max_recursions", p.max_recursions));
  p.seed = cfg.get_u64("run.seed", 1);
  p.validate();
  return p;
}

FunctionOracle oracle_from(const KeyValueConfig& cfg, Index dim) {
  BuiltinParams bp;
  bp.a = cfg.get_double("fn.a", 1.0);
  if (cfg.has("fn.b_csv")) {
    const Matrix m = read_matrix_csv(cfg.get_string("fn.b_csv", ""));
    bp.b = Eigen::Map<const Vector>(m.data(), m.size());
  }
  if (cfg.has("fn.w_csv")) bp.W = read_matrix_csv(cfg.get_string("fn.w_csv", ""));
  FunctionOracle oracle =
      builtin_oracle(cfg.get_string("fn.name", "l1"), bp, dim);
  const double sigma = cfg.get_double("fn.sigma", 0.0);
  if (sigma > 0.0)
    oracle = make_noisy(
        oracle, NoiseSpec{sigma, derive_seed(cfg.get_u64("run.seed", 1), 991)});
  return oracle;
}

ExperimentConfig experiment_config_from(const KeyValueConfig& cfg,
                                        Family family) {
  ExperimentConfig e;
  e.family = family;
  const std::string scale = cfg.get_string("run.scale", "desk");
  if (scale == "desk")
    e.scale = Scale::Desk;
  else if (scale == "paper")
    e.scale = Scale::Paper;
  else
    throw ConfigError("run.scale must be desk or paper, got '" + scale + "'");
  e.m = static_cast<int>(cfg.get_int("run.m", 0));
  e.n = static_cast<int>(cfg.get_int("run.n", 0));
  e.trials = static_cast<int>(cfg.get_int("run.trials", 30));
  e.iters = static_cast<int>(cfg.get_int("run.iters", 2000));
  e.base_seed = cfg.get_u64("run.seed", 1);
  e.prox.delta = cfg.get_double("prox.delta", 0.1);
  e.prox.num_samples = static_cast<int>(cfg.get_int("prox.samples", 1000));
  e.prox.alpha = cfg.get_double("prox.alpha", 1.0);
  e.prox.eps_underflow = cfg.get_double("prox.eps", 1e-12);
  e.prox.seed = e.base_seed;
  e.sigma = cfg.get_double("fn.sigma", 0.005);
  if (family == Family::NoisyLmm && !cfg.has("fn.sigma")) e.sigma = 0.005;
  e.lambda_reg = cfg.get_double("run.lambda", 0.1);
  e.delta2 = cfg.get_double("prox.delta2", 0.01);
  e.grid_points = static_cast<int>(cfg.get_int("run.grid_points", 101));
  e.out_dir = cfg.get_string("run.out", "out");
  return e;
}

/// Closed-form 1-D references for the envelope subcommand.
struct Analytic1d {
  std::function<double(double)> f, u, prox;
};

Analytic1d analytic_1d(const std::string& name, double t, double a) {
  auto vec1 = [](double v) { return Vector::Constant(1, v); };
  if (name == "l1")
    return {[](double y) { return std::abs(y); },
            [vec1, t](double y) { return envelope_l1(vec1(y), t); },
            [t](double y) { return shrink(y, t); }};
  if (name == "quadratic_linear")
    return {[](double y) { return y * y + y; },
            [t](double y) {
              const double z = (y - t) / (1.0 + 2.0 * t);
              return z * z + z + (z - y) * (z - y) / (2.0 * t);
            },
            [t](double y) { return (y - t) / (1.0 + 2.0 * t); }};
  if (name == "log_barrier")
    return {[](double y) {
              return y > 0.0 ? -std::log(y)
                             : std::numeric_limits<double>::infinity();
            },
            [t](double y) {
              const double z = 0.5 * (y + std::sqrt(y * y + 4.0 * t));
              return -std::log(z) + (z - y) * (z - y) / (2.0 * t);
            },
            [t](double y) { return 0.5 * (y + std::sqrt(y * y + 4.0 * t)); }};
  if (name == "neg_l1")
    return {[](double y) { return -std::abs(y); },
            [vec1, t](double y) { return envelope_neg_l1(vec1(y), t); },
            [t](double y) { return y >= 0.0 ? y + t : y - t; }};
  if (name == "neg_quadratic")
    return {[a](double y) { return -0.5 * a * y * y; },
            [vec1, t, a](double y) {
              return envelope_neg_quadratic(vec1(y), t, a);
            },
            [t, a](double y) { return y / (1.0 - a * t); }};
  if (name == "quad_minus_log")
    return {[](double y) {
              return y > 0.0 ? y * y - std::log(y)
                             : std::numeric_limits<double>::infinity();
            },
            [t](double y) {
              const double z = prox_quad_minus_log(y, t);
              return z * z - std::log(z) + (z - y) * (z - y) / (2.0 * t);
            },
            [t](double y) { return prox_quad_minus_log(y, t); }};
  throw ConfigError("envelope: no closed forms for function '" + name + "'");
}

int run_prox(const KeyValueConfig& cfg, const std::string& x_text) {
  const Vector x = parse_vector(x_text);
  FunctionOracle oracle = oracle_from(cfg, x.size());
  const ProxParams p = prox_params_from(cfg);
  const ProxResult r = hj_prox(x, oracle, p);

  std::ostringstream est;
  for (Index i = 0; i < r.estimate.size(); ++i) {
    if (i) est << ',';
    est << format_double(r.estimate[i]);
  }
  std::printf("estimate=%s\n", est.str().c_str());
  std::printf("effective_alpha=%s\n", format_double(r.effective_alpha).c_str());
  std::printf("applied_shift=%s\n", format_double(r.applied_shift).c_str());
  std::printf("recursions=%d\n", r.recursion_count);
  std::printf("ess=%s\n", format_double(r.ess).c_str());
  std::printf("weights_max=%s\n", format_double(r.weights_max).c_str());
  std::printf("oracle_calls=%llu\n",
              static_cast<unsigned long long>(oracle.call_count()));
  return 0;
}

int run_envelope(const KeyValueConfig& cfg, const std::string& grid_spec,
                 bool out_given) {
  const auto grid = parse_grid(grid_spec);
  const std::string name = cfg.get_string("fn.name", "l1");
  const ProxParams p = prox_params_from(cfg);
  const double sigma = cfg.get_double("fn.sigma", 0.0);
  const double delta2 = cfg.get_double("prox.delta2", 0.01);
  const Analytic1d ref = analytic_1d(name, p.t, cfg.get_double("fn.a", 1.0));
  FunctionOracle oracle = oracle_from(cfg, 1);

  CsvTable table;
  table.header = {"function", "t",      "delta",      "delta2",
                  "x",        "f",      "u_exact",    "u_mc",
                  "u_quad",   "prox_exact", "prox_hj", "abs_err"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    const double x = grid[gi];
    const Vector xv = Vector::Constant(1, x);
    ProxParams prow = p;
    prow.seed = derive_seed(p.seed, gi);
    double u_mc = nan, u_quad = nan, prox_hj = nan;
    try {
      u_mc = sigma > 0.0 ? noisy_envelope(xv, oracle, prow, delta2).value
                         : envelope_value(xv, oracle, prow);
      prox_hj = hj_prox(xv, oracle, prow).estimate[0];
      u_quad = quadrature_reference_1d(x, p.t, ref.f, p.delta).u_value;
    } catch (const Error&) {
      // leave NaN cells, keep going
    }
    const double px = ref.prox(x);
    table.rows.push_back({0.0, p.t, p.delta, sigma > 0.0 ? delta2 : 0.0, x,
                          ref.f(x), ref.u(x), u_mc, u_quad, px, prox_hj,
                          std::abs(prox_hj - px)});
  }

  if (out_given) {
    const std::filesystem::path dir = cfg.get_string("run.out", "out");
    std::filesystem::create_directories(dir);
    const auto path = dir / ("envelope_" + name + ".csv");
    write_csv(path, table);
    std::printf("%s\n", path.string().c_str());
  } else {
    for (size_t i = 0; i < table.header.size(); ++i)
      std::printf("%s%s", i ? "," : "", table.header[i].c_str());
    std::printf("\n");
    for (const auto& row : table.rows) {
      for (size_t i = 0; i < row.size(); ++i)
        std::printf("%s%s", i ? "," : "", format_double(row[i]).c_str());
      std::printf("\n");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampled proximal operators, smoothed envelopes, and the "
               "experiment families built on them"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key=value configuration file");

  struct Sub {
    FlagSet flags;
    std::string x_text;
    std::string grid_spec;
  };
  std::map<std::string, Sub> subs;

  auto add_common = [&](CLI::App* cmd, Sub& sub) {
    sub.flags.cmd = cmd;
    sub.flags.add_string("--fn", "fn.name", "builtin function name");
    sub.flags.add_double("--t", "prox.t", "proximal step t");
    sub.flags.add_double("--delta", "prox.delta", "smoothing delta");
    sub.flags.add_double("--delta2", "prox.delta2", "second-stage smoothing");
    sub.flags.add_double("--alpha", "prox.alpha", "initial exponent scale");
    sub.flags.add_double("--eps", "prox.eps", "underflow tolerance");
    sub.flags.add_int("--samples", "prox.samples", "samples per batch");
    sub.flags.add_int("--seed", "run.seed", "base seed");
    sub.flags.add_int("--trials", "run.trials", "independent trials");
    sub.flags.add_int("--iters", "run.iters", "solver iterations");
    sub.flags.add_string("--scale", "run.scale", "desk or paper");
    sub.flags.add_string("--out", "run.out", "output directory");
    sub.flags.add_int("--m", "run.m", "rows of A");
    sub.flags.add_int("--n", "run.n", "columns of A");
    sub.flags.add_double("--sigma", "fn.sigma", "relative oracle noise");
    sub.flags.add_double("--a", "fn.a", "builtin parameter a");
    sub.flags.add_string("--b-csv", "fn.b_csv", "CSV file for vector b");
    sub.flags.add_string("--w-csv", "fn.w_csv", "CSV file for matrix W");
    sub.flags.add_double("--lambda", "run.lambda", "l1 weight in the objective");
    sub.flags.add_int("--grid-points", "run.grid_points", "sweep grid size");
  };

  CLI::App* prox_cmd = app.add_subcommand("prox", "estimate a proximal point");
  subs["prox"].flags.cmd = prox_cmd;
  add_common(prox_cmd, subs["prox"]);
  prox_cmd->add_option("--x", subs["prox"].x_text,
                       "evaluation point, comma separated")
      ->required();

  CLI::App* env_cmd =
      app.add_subcommand("envelope", "tabulate envelope estimates on a grid");
  add_common(env_cmd, subs["envelope"]);
  env_cmd->add_option("--grid", subs["envelope"].grid_spec, "grid lo:hi:count")
      ->required();

  CLI::App* lasso_cmd =
      app.add_subcommand("lasso", "l1-regularized least squares experiment");
  add_common(lasso_cmd, subs["lasso"]);

  CLI::App* lmm_cmd = app.add_subcommand(
      "lmm", "noisy-oracle constrained experiment (method of multipliers)");
  add_common(lmm_cmd, subs["lmm"]);

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "envelope sweep over the builtin functions");
  add_common(sweep_cmd, subs["sweep"]);

  if (argc <= 1) {
    std::fputs(app.help().c_str(), stderr);
    return 1;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::puts(app.help().c_str());
      return 0;
    }
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }

  try {
    KeyValueConfig file_cfg;
    if (!config_path.empty()) {
      file_cfg = KeyValueConfig::parse_file(config_path);
      file_cfg.validate_keys(known_keys());
    }

    const std::string name = app.get_subcommands().front()->get_name();
    Sub& sub = subs[name];
    KeyValueConfig overrides;
    for (const auto& [k, v] : sub.flags.staged) overrides.set(k, v);
    const bool out_given =
        sub.flags.staged.count("run.out") > 0 || file_cfg.has("run.out");
    KeyValueConfig cfg = layered_config(default_config(), file_cfg, overrides);

    if (name == "prox") return run_prox(cfg, sub.x_text);
    if (name == "envelope") return run_envelope(cfg, sub.grid_spec, out_given);

    Family family = Family::EnvelopeSweep;
    if (name == "lasso") family = Family::Lasso;
    if (name == "lmm") family = Family::NoisyLmm;
    ExperimentConfig ecfg = experiment_config_from(cfg, family);
    std::filesystem::path manifest;
    if (family == Family::Lasso)
      manifest = run_lasso_experiment(ecfg);
    else if (family == Family::NoisyLmm)
      manifest = run_noisy_lmm_experiment(ecfg);
    else
      manifest = run_envelope_sweep(ecfg);
    std::printf("%s\n", manifest.string().c_str());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const hjprox::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

// barma: Bayesian inference for beta-ARMA time series on (0,1).
//
// Subcommands: fit, forecast, simulate, select, unitroot, mc-study.
// All outputs are CSV files plus a manifest that reproduces the run:
//   barma fit --input y.csv --p 1 --q 1 --out run1
//   barma fit --config run1/manifest.txt --out run2   # byte-identical CSVs

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "barma/barma.hpp"

namespace fs = std::filesystem;
using barma::io::format_double;

namespace {

std::vector<double> parse_list(const std::string& text, char sep = ',') {
  std::vector<double> out;
  std::string field;
  std::stringstream ss(text);
  while (std::getline(ss, field, sep)) {
    field = barma::io::trim(field);
    if (field.empty()) continue;
    std::size_t consumed = 0;
    out.push_back(std::stod(field, &consumed));
    if (consumed != field.size())
      throw std::invalid_argument("cannot parse '" + field + "' as a number");
  }
  return out;
}

/// Semicolon-separated cells, each a comma-separated vector. An empty
/// string yields one empty cell.
std::vector<std::vector<double>> parse_cells(const std::string& text) {
  std::vector<std::vector<double>> out;
  std::string cell;
  std::stringstream ss(text);
  while (std::getline(ss, cell, ';')) out.push_back(parse_list(cell));
  if (out.empty()) out.push_back({});
  return out;
}

std::vector<barma::ModelOrder> parse_order_grid(const std::string& text) {
  std::vector<barma::ModelOrder> grid;
  for (const auto& cell : parse_cells(text)) {
    if (cell.size() != 2)
      throw std::invalid_argument("order grid entries must be 'p,q' pairs: '" + text + "'");
    grid.push_back({static_cast<std::size_t>(cell[0]), static_cast<std::size_t>(cell[1]), 0});
  }
  return grid;
}

std::string label_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

std::string join_doubles(const std::vector<double>& v, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += label_double(v[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// option bundles
// ---------------------------------------------------------------------------

struct PriorOpts {
  double nu_shape = 5.0;
  double nu_rate = 0.1;
  double nu_mean = 0.0;  // used when > 0 together with nu_var
  double nu_var = 0.0;
  std::string alpha_prior = "normal";
  double sigma2_alpha = 20000.0 * 20000.0;
  double sigma2_beta = 20000.0 * 20000.0;
  double sigma2_phi = 20000.0 * 20000.0;
  double sigma2_theta = 20000.0 * 20000.0;

  barma::PriorSpec to_spec() const {
    barma::PriorSpec priors;
    priors.nu_shape = nu_shape;
    priors.nu_rate = nu_rate;
    if (nu_mean > 0.0 || nu_var > 0.0) {
      auto [a, b] = barma::gamma_prior_from_mean_var(nu_mean, nu_var);
      priors.nu_shape = a;
      priors.nu_rate = b;
    }
    priors.alpha_prior = alpha_prior == "uniform" ? barma::PriorSpec::AlphaPrior::uniform
                                                  : barma::PriorSpec::AlphaPrior::normal;
    priors.sigma2_alpha = sigma2_alpha;
    priors.sigma2_beta = sigma2_beta;
    priors.sigma2_phi = sigma2_phi;
    priors.sigma2_theta = sigma2_theta;
    priors.validate();
    return priors;
  }
};

void add_prior_options(CLI::App* cmd, PriorOpts& opts) {
  cmd->add_option("--nu-shape", opts.nu_shape, "Gamma prior shape for nu")
      ->capture_default_str();
  cmd->add_option("--nu-rate", opts.nu_rate, "Gamma prior rate for nu")->capture_default_str();
  cmd->add_option("--nu-mean", opts.nu_mean,
                  "Gamma prior mean for nu (overrides shape/rate together with --nu-var)")
      ->capture_default_str();
  cmd->add_option("--nu-var", opts.nu_var, "Gamma prior variance for nu")->capture_default_str();
  cmd->add_option("--alpha-prior", opts.alpha_prior, "Intercept prior: normal or uniform")
      ->check(CLI::IsMember({"normal", "uniform"}))
      ->capture_default_str();
  cmd->add_option("--sigma2-alpha", opts.sigma2_alpha, "Normal prior variance for alpha")
      ->capture_default_str();
  cmd->add_option("--sigma2-beta", opts.sigma2_beta, "Normal prior variance for beta")
      ->capture_default_str();
  cmd->add_option("--sigma2-phi", opts.sigma2_phi, "Normal prior variance for phi")
      ->capture_default_str();
  cmd->add_option("--sigma2-theta", opts.sigma2_theta, "Normal prior variance for theta")
      ->capture_default_str();
}

struct SamplerOpts {
  std::size_t chains = 4;
  std::size_t iters = 2000;
  double warmup = 0.5;
  double target_accept = 0.8;
  std::size_t max_depth = 10;

  barma::SamplerConfig to_config(std::uint64_t seed, std::size_t threads) const {
    barma::SamplerConfig config;
    config.n_chains = chains;
    config.n_iterations = iters;
    config.warmup_fraction = warmup;
    config.target_accept = target_accept;
    config.max_tree_depth = max_depth;
    config.seed = seed;
    config.threads = threads;
    config.validate();
    return config;
  }
};

void add_sampler_options(CLI::App* cmd, SamplerOpts& opts) {
  cmd->add_option("--chains", opts.chains, "Number of MCMC chains")->capture_default_str();
  cmd->add_option("--iters", opts.iters, "Iterations per chain (warmup included)")
      ->capture_default_str();
  cmd->add_option("--warmup", opts.warmup, "Warmup fraction of iterations")
      ->capture_default_str();
  cmd->add_option("--target-accept", opts.target_accept, "Dual-averaging acceptance target")
      ->capture_default_str();
  cmd->add_option("--max-depth", opts.max_depth, "Maximum NUTS tree depth")
      ->capture_default_str();
}

// ---------------------------------------------------------------------------
// manifest
// ---------------------------------------------------------------------------

class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void add(const std::string& key, const std::string& value) {
    entries_.emplace_back(key, "\"" + value + "\"");
  }
  void add(const std::string& key, double value) { entries_.emplace_back(key, format_double(value)); }
  void add(const std::string& key, std::size_t value) {
    entries_.emplace_back(key, std::to_string(value));
  }

  void write(const fs::path& dir) const {
    std::ofstream out(dir / "manifest.txt");
    if (!out) throw std::invalid_argument("cannot write manifest in '" + dir.string() + "'");
    out << "# barma " << barma::kVersion << " manifest; re-run with: barma " << command_
        << " --config <this file> [--out NEWDIR]\n";
    out << "[" << command_ << "]\n";
    for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::size_t resolve_threads(std::size_t threads_flag) {
  if (threads_flag > 0) return threads_flag;
  if (const char* env = std::getenv("BARMA_THREADS")) {
    const long v = std::atol(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return barma::default_thread_count();
}

// ---------------------------------------------------------------------------
// output writers
// ---------------------------------------------------------------------------

void write_draws_csv(const fs::path& dir, const barma::BarmaFit& fit, std::size_t thin) {
  barma::io::CsvWriter csv((dir / "draws.csv").string());
  std::vector<std::string> header{"chain", "iteration"};
  header.insert(header.end(), fit.names.begin(), fit.names.end());
  header.insert(header.end(), {"accept_stat", "tree_depth", "divergent"});
  csv.header(header);
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    const auto& chain = fit.chains[c];
    for (std::size_t i = 0; i < chain.draws.rows; i += thin) {
      std::vector<double> row{static_cast<double>(c + 1), static_cast<double>(i + 1)};
      for (std::size_t j = 0; j < chain.draws.cols; ++j) row.push_back(chain.draws(i, j));
      row.push_back(chain.accept_stat[i]);
      row.push_back(chain.tree_depth[i]);
      row.push_back(chain.divergent[i]);
      csv.row(row);
    }
  }
}

void write_summary_csv(const fs::path& dir, const barma::PosteriorSummary& summary) {
  barma::io::CsvWriter csv((dir / "summary.csv").string());
  csv.header({"parameter", "mean", "sd", "median", "lower", "upper", "ess", "rhat"});
  for (const auto& p : summary.parameters) {
    csv.mixed_row({p.name, format_double(p.mean), format_double(p.sd), format_double(p.median),
                   format_double(p.lower), format_double(p.upper), format_double(p.ess),
                   format_double(p.rhat)});
  }
}

void write_unitroot_csv(const fs::path& dir, const barma::RootReport& report) {
  barma::io::CsvWriter csv((dir / "unitroot.csv").string());
  csv.header({"threshold", "probability"});
  for (std::size_t k = 0; k < report.thresholds.size(); ++k)
    csv.row({report.thresholds[k], report.probabilities[k]});
}

void write_density_csv(const fs::path& dir, const barma::BarmaFit& fit, std::size_t grid_size) {
  barma::io::CsvWriter csv((dir / "density.csv").string());
  csv.header({"parameter", "x", "density"});
  const auto pooled = barma::pool_draws(fit.chains);
  for (std::size_t j = 0; j < pooled.cols; ++j) {
    const auto grid = barma::io::kernel_density(pooled.column(j), grid_size);
    for (std::size_t g = 0; g < grid.x.size(); ++g)
      csv.mixed_row({fit.names[j], format_double(grid.x[g]), format_double(grid.density[g])});
  }
}

void print_summary(const barma::PosteriorSummary& summary) {
  std::printf("%-10s %10s %10s %10s %10s %10s %8s %7s\n", "parameter", "mean", "sd", "median",
              "lower", "upper", "ess", "rhat");
  for (const auto& p : summary.parameters) {
    std::printf("%-10s %10.4f %10.4f %10.4f %10.4f %10.4f %8.0f %7.3f\n", p.name.c_str(), p.mean,
                p.sd, p.median, p.lower, p.upper, p.ess, p.rhat);
  }
}

// ---------------------------------------------------------------------------
// fit / forecast shared pipeline
// ---------------------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::size_t p = 0;
  std::size_t q = 0;
  std::string link = "logit";
  PriorOpts priors;
  SamplerOpts sampler;
  double level = 0.95;
  std::string thresholds = "1.01,1.02,1.03,1.04,1.05";
  std::size_t thin = 1;
  std::size_t density_grid = 0;
};

void add_fit_options(CLI::App* cmd, FitArgs& args) {
  cmd->add_option("--input", args.input, "Input CSV (response first, covariates after)")
      ->required();
  cmd->add_option("--p", args.p, "AR order")->capture_default_str();
  cmd->add_option("--q", args.q, "MA order")->capture_default_str();
  cmd->add_option("--link", args.link, "Link function")
      ->check(CLI::IsMember({"logit", "cloglog"}))
      ->capture_default_str();
  add_prior_options(cmd, args.priors);
  add_sampler_options(cmd, args.sampler);
  cmd->add_option("--level", args.level, "Credible interval level")->capture_default_str();
  cmd->add_option("--thresholds", args.thresholds, "Unit-root threshold grid")
      ->capture_default_str();
  cmd->add_option("--thin", args.thin, "Keep every k-th draw in draws.csv")
      ->capture_default_str();
  cmd->add_option("--density-grid", args.density_grid,
                  "Emit density.csv with this many grid points (0 = off)")
      ->capture_default_str();
}

void manifest_fit_options(Manifest& m, const FitArgs& args, std::uint64_t seed,
                          std::size_t threads, const std::string& out) {
  m.add("input", args.input);
  m.add("p", args.p);
  m.add("q", args.q);
  m.add("link", args.link);
  m.add("nu-shape", args.priors.nu_shape);
  m.add("nu-rate", args.priors.nu_rate);
  if (args.priors.nu_mean > 0.0) m.add("nu-mean", args.priors.nu_mean);
  if (args.priors.nu_var > 0.0) m.add("nu-var", args.priors.nu_var);
  m.add("alpha-prior", args.priors.alpha_prior);
  m.add("sigma2-alpha", args.priors.sigma2_alpha);
  m.add("sigma2-beta", args.priors.sigma2_beta);
  m.add("sigma2-phi", args.priors.sigma2_phi);
  m.add("sigma2-theta", args.priors.sigma2_theta);
  m.add("chains", args.sampler.chains);
  m.add("iters", args.sampler.iters);
  m.add("warmup", args.sampler.warmup);
  m.add("target-accept", args.sampler.target_accept);
  m.add("max-depth", args.sampler.max_depth);
  m.add("level", args.level);
  m.add("thresholds", args.thresholds);
  m.add("thin", args.thin);
  m.add("seed", seed);
  m.add("threads", threads);
  m.add("out", out);
}

struct LoadedFit {
  barma::io::SeriesData data;
  barma::BarmaFit fit;
  barma::PosteriorSummary summary;
};

LoadedFit run_fit(const FitArgs& args, std::uint64_t seed, std::size_t threads,
                  std::size_t holdout = 0) {
  auto data = barma::io::load_series(args.input);
  if (holdout > 0) {
    if (holdout >= data.series.size())
      throw std::invalid_argument("holdout must be smaller than the series length");
    const std::size_t keep = data.series.size() - holdout;
    std::vector<double> y(data.series.values().begin(), data.series.values().begin() + keep);
    std::vector<double> x;
    const std::size_t r = data.covariates.cols();
    for (std::size_t i = 0; i < keep; ++i)
      for (std::size_t j = 0; j < r; ++j) x.push_back(data.covariates(i, j));
    data.series = barma::ObservationSeries(std::move(y));
    const barma::CovariateMatrix trimmed(keep, r, std::move(x));
    data.covariates = trimmed;
  }

  const barma::ModelOrder order{args.p, args.q, data.covariates.cols()};
  barma::PosteriorEvaluator evaluator(data.series, data.covariates, order,
                                      args.priors.to_spec(),
                                      {barma::link_from_string(args.link)});
  auto config = args.sampler.to_config(seed, threads);
  LoadedFit result{std::move(data), barma::fit_barma(evaluator, config), {}};
  result.summary = barma::summarize_draws(result.fit.chains, args.level, result.fit.names);
  return result;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_fit(const FitArgs& args, std::uint64_t seed, std::size_t threads_flag,
            const std::string& out) {
  const std::size_t threads = resolve_threads(threads_flag);
  const fs::path dir = prepare_out_dir(out);
  const auto run = run_fit(args, seed, threads);

  for (const auto& failure : run.fit.chain_failures)
    std::cerr << "warning: " << failure << "\n";

  write_draws_csv(dir, run.fit, args.thin == 0 ? 1 : args.thin);
  write_summary_csv(dir, run.summary);
  if (args.p >= 1) {
    const auto thresholds = parse_list(args.thresholds);
    const auto report =
        barma::unit_root_probability(run.fit.chains, run.fit.order, thresholds);
    write_unitroot_csv(dir, report);
  }
  if (args.density_grid > 0) write_density_csv(dir, run.fit, args.density_grid);

  Manifest manifest("fit");
  manifest_fit_options(manifest, args, seed, threads_flag, out);
  manifest.write(dir);

  print_summary(run.summary);
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_forecast(const FitArgs& args, std::size_t horizon, std::size_t holdout,
                 const std::string& future_path, std::uint64_t seed, std::size_t threads_flag,
                 const std::string& out) {
  const std::size_t threads = resolve_threads(threads_flag);
  const fs::path dir = prepare_out_dir(out);
  const auto run = run_fit(args, seed, threads, holdout);
  const std::size_t h = holdout > 0 ? holdout : horizon;

  barma::CovariateMatrix future;
  if (run.fit.order.r > 0) {
    if (holdout > 0) {
      // the held-out covariate rows are the future design
      const auto full = barma::io::load_series(args.input);
      const std::size_t n_train = run.data.series.size();
      std::vector<double> x;
      for (std::size_t i = n_train; i < n_train + h; ++i)
        for (std::size_t j = 0; j < full.covariates.cols(); ++j)
          x.push_back(full.covariates(i, j));
      future = barma::CovariateMatrix(h, full.covariates.cols(), std::move(x));
    } else if (!future_path.empty()) {
      const auto loaded = barma::io::load_series(future_path);
      // response column of the future file is ignored; covariates used
      future = loaded.covariates;
    } else {
      throw std::invalid_argument(
          "model has covariates: supply --holdout or --future-covariates");
    }
  }

  const auto pooled = barma::pool_draws(run.fit.chains);
  auto result = barma::predictive_draws(pooled, run.data.series, run.data.covariates,
                                        run.fit.order, {barma::link_from_string(args.link)}, h,
                                        barma::RngStream(seed).derive_seed(0xf0c), future,
                                        args.level, threads);

  std::vector<double> actuals;
  if (holdout > 0) {
    const auto full = barma::io::load_series(args.input);
    const std::size_t n_train = run.data.series.size();
    for (std::size_t k = 0; k < h; ++k) actuals.push_back(full.series[n_train + k]);
  }

  barma::io::CsvWriter csv((dir / "forecast.csv").string());
  if (actuals.empty()) {
    csv.header({"horizon", "mean", "lower", "upper"});
    for (std::size_t k = 0; k < h; ++k)
      csv.row({static_cast<double>(k + 1), result.mean[k], result.lower[k], result.upper[k]});
  } else {
    const auto cum_mae = barma::mae(result.mean, actuals);
    const auto abs_err = barma::absolute_errors(result.mean, actuals);
    csv.header({"horizon", "mean", "lower", "upper", "actual", "abs_error", "mae"});
    for (std::size_t k = 0; k < h; ++k)
      csv.row({static_cast<double>(k + 1), result.mean[k], result.lower[k], result.upper[k],
               actuals[k], abs_err[k], cum_mae[k]});
    std::printf("MAE at h=%zu: %.6f\n", h, cum_mae.back());
  }
  write_summary_csv(dir, run.summary);

  Manifest manifest("forecast");
  manifest_fit_options(manifest, args, seed, threads_flag, out);
  manifest.add("horizon", horizon);
  manifest.add("holdout", holdout);
  if (!future_path.empty()) manifest.add("future-covariates", future_path);
  manifest.write(dir);
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_simulate(std::size_t n, std::size_t burn_in, double nu, double alpha,
                 const std::string& phi_text, const std::string& theta_text,
                 const std::string& link, std::uint64_t seed, const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  const auto phi = parse_list(phi_text);
  const auto theta = parse_list(theta_text);
  barma::ParameterVector params(nu, alpha, {}, phi, theta);
  const barma::ModelOrder order = params.order();
  barma::RngStream rng(seed);
  const auto series = barma::simulate_barma(params, order, {barma::link_from_string(link)}, n,
                                            burn_in, {}, rng);

  barma::io::CsvWriter csv((dir / "series.csv").string());
  csv.header({"y"});
  for (double y : series.values()) csv.row({y});

  Manifest manifest("simulate");
  manifest.add("n", n);
  manifest.add("burn-in", burn_in);
  manifest.add("nu", nu);
  manifest.add("alpha", alpha);
  manifest.add("phi", phi_text);
  manifest.add("theta", theta_text);
  manifest.add("link", link);
  manifest.add("seed", seed);
  manifest.add("out", out);
  manifest.write(dir);
  std::printf("wrote %s\n", (dir / "series.csv").string().c_str());
  return 0;
}

int cmd_select(const std::string& input, const std::string& grid_text, const PriorOpts& priors,
               const SamplerOpts& sampler, const std::string& link, std::size_t rungs,
               std::size_t rung_iters, double rung_warmup, std::uint64_t seed,
               std::size_t threads_flag, const std::string& out) {
  const std::size_t threads = resolve_threads(threads_flag);
  const fs::path dir = prepare_out_dir(out);
  const auto data = barma::io::load_series(input);
  auto grid = parse_order_grid(grid_text);
  for (auto& order : grid) order.r = data.covariates.cols();

  auto ladder = barma::LadderSpec::make(rungs);
  ladder.rung_iterations = rung_iters;
  ladder.rung_warmup_fraction = rung_warmup;

  auto config = sampler.to_config(seed, threads);
  const auto report = barma::order_search(data.series, data.covariates, grid, priors.to_spec(),
                                          {barma::link_from_string(link)}, ladder, config);

  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

  barma::io::CsvWriter csv((dir / "selection.csv").string());
  csv.header({"p", "q", "log_ml", "std_error", "status", "selected"});
  for (std::size_t i = 0; i < report.fits.size(); ++i) {
    const auto& f = report.fits[i];
    csv.mixed_row({std::to_string(f.order.p), std::to_string(f.order.q),
                   format_double(f.log_ml), format_double(f.std_error),
                   f.ok ? "ok" : "failed: " + f.error,
                   report.selected == i ? "1" : "0"});
  }

  Manifest manifest("select");
  manifest.add("input", input);
  manifest.add("grid", grid_text);
  manifest.add("link", link);
  manifest.add("nu-shape", priors.nu_shape);
  manifest.add("nu-rate", priors.nu_rate);
  manifest.add("alpha-prior", priors.alpha_prior);
  manifest.add("sigma2-alpha", priors.sigma2_alpha);
  manifest.add("sigma2-beta", priors.sigma2_beta);
  manifest.add("sigma2-phi", priors.sigma2_phi);
  manifest.add("sigma2-theta", priors.sigma2_theta);
  manifest.add("rungs", rungs);
  manifest.add("rung-iters", rung_iters);
  manifest.add("rung-warmup", rung_warmup);
  manifest.add("target-accept", sampler.target_accept);
  manifest.add("max-depth", sampler.max_depth);
  manifest.add("seed", seed);
  manifest.add("threads", threads_flag);
  manifest.add("out", out);
  manifest.write(dir);

  if (!report.has_selection())
    throw barma::numeric_error("select: no order could be fitted; see selection.csv");
  const auto& best = report.best();
  std::printf("selected order (p,q) = (%zu,%zu), log-ML %.4f (se %.4f)\n", best.order.p,
              best.order.q, best.log_ml, best.std_error);
  for (const auto& f : report.fits) {
    if (f.ok)
      std::printf("  (%zu,%zu): log-ML %10.4f  se %.4f  logBF-vs-best %8.4f\n", f.order.p,
                  f.order.q, f.log_ml, f.std_error,
                  barma::log_bayes_factor(f.log_ml, best.log_ml));
    else
      std::printf("  (%zu,%zu): failed (%s)\n", f.order.p, f.order.q, f.error.c_str());
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_unitroot(const std::string& draws_path, const std::string& thresholds_text,
                 const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  std::ifstream in(draws_path);
  if (!in) throw std::invalid_argument("cannot open '" + draws_path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("'" + draws_path + "' is empty");
  const auto header = barma::io::split_csv_line(line);

  std::vector<std::size_t> phi_cols;
  for (std::size_t p = 1;; ++p) {
    const std::string name = "phi" + std::to_string(p);
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) break;
    phi_cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  if (phi_cols.empty())
    throw std::invalid_argument("no phi columns found in '" + draws_path + "'");

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (barma::io::trim(line).empty()) continue;
    const auto fields = barma::io::split_csv_line(line);
    for (const auto col : phi_cols) values.push_back(std::stod(fields.at(col)));
    ++rows;
  }
  barma::Matrix phi(rows, phi_cols.size());
  phi.data = std::move(values);

  const auto thresholds = parse_list(thresholds_text);
  const auto report = barma::unit_root_probability_from_phi(phi, thresholds);
  write_unitroot_csv(dir, report);

  Manifest manifest("unitroot");
  manifest.add("draws", draws_path);
  manifest.add("thresholds", thresholds_text);
  manifest.add("out", out);
  manifest.write(dir);

  for (std::size_t k = 0; k < report.thresholds.size(); ++k)
    std::printf("P(min root modulus < %.4f) = %.4f\n", report.thresholds[k],
                report.probabilities[k]);
  return 0;
}

int cmd_mc_study(const std::string& nu_text, const std::string& phi_text,
                 const std::string& theta_text, double alpha, const std::string& n_text,
                 std::size_t replicates, std::size_t burn_in, const std::string& prior_mean_text,
                 const std::string& prior_var_text, const PriorOpts& base_priors,
                 const SamplerOpts& sampler, const std::string& link,
                 const std::string& thresholds_text, std::uint64_t seed,
                 std::size_t threads_flag, const std::string& out) {
  const fs::path dir = prepare_out_dir(out);

  const auto nus = parse_list(nu_text, ';');
  const auto ns = parse_list(n_text, ';');
  auto phis = parse_cells(phi_text);
  auto thetas = parse_cells(theta_text);
  if (thetas.size() == 1 && phis.size() > 1) thetas.resize(phis.size(), thetas[0]);
  if (phis.size() == 1 && thetas.size() > 1) phis.resize(thetas.size(), phis[0]);
  if (phis.size() != thetas.size())
    throw std::invalid_argument("mc-study: --phi and --theta cell counts must match");

  // prior grid: product of means and variances when given, else the base prior
  std::vector<barma::PriorSpec> prior_grid;
  std::vector<std::string> prior_labels;
  const auto prior_means = parse_list(prior_mean_text, ';');
  const auto prior_vars = parse_list(prior_var_text, ';');
  if (prior_means.empty() != prior_vars.empty())
    throw std::invalid_argument("mc-study: give both --prior-nu-mean and --prior-nu-var");
  if (prior_means.empty()) {
    prior_grid.push_back(base_priors.to_spec());
    prior_labels.push_back("default");
  } else {
    for (double pm : prior_means)
      for (double pv : prior_vars) {
        barma::PriorSpec priors = base_priors.to_spec();
        auto [a, b] = barma::gamma_prior_from_mean_var(pm, pv);
        priors.nu_shape = a;
        priors.nu_rate = b;
        prior_grid.push_back(priors);
        prior_labels.push_back("m" + label_double(pm) + "_v" + label_double(pv));
      }
  }

  barma::StudyDesign design;
  design.replicates = replicates;
  design.burn_in = burn_in;
  design.link = {barma::link_from_string(link)};
  design.sampler = sampler.to_config(seed, 1);
  design.thresholds = parse_list(thresholds_text);
  design.seed = seed;
  design.threads = resolve_threads(threads_flag);
  for (double nu : nus)
    for (std::size_t c = 0; c < phis.size(); ++c)
      for (double n : ns)
        for (std::size_t g = 0; g < prior_grid.size(); ++g) {
          barma::StudyCell cell;
          cell.truth = barma::ParameterVector(nu, alpha, {}, phis[c], thetas[c]);
          cell.n = static_cast<std::size_t>(n);
          cell.priors = prior_grid[g];
          cell.label = "nu" + label_double(nu) + "_phi[" + join_doubles(phis[c]) +
                       "]_theta[" + join_doubles(thetas[c]) + "]_n" + label_double(n) + "_" +
                       prior_labels[g];
          design.cells.push_back(std::move(cell));
        }

  const auto report = barma::mc_experiment(design);

  {
    barma::io::CsvWriter csv((dir / "replicates.csv").string());
    csv.header({"cell", "label", "replicate", "status", "parameter", "truth", "post_mean",
                "lower", "upper", "covered"});
    for (const auto& rec : report.replicates) {
      const auto& cell = design.cells[rec.cell];
      const auto names = barma::parameter_names(cell.truth.order());
      const auto truth = cell.truth.flatten();
      if (!rec.ok) {
        csv.mixed_row({std::to_string(rec.cell), cell.label, std::to_string(rec.replicate),
                       "failed: " + rec.error, "", "", "", "", "", ""});
        continue;
      }
      for (std::size_t j = 0; j < names.size(); ++j) {
        csv.mixed_row({std::to_string(rec.cell), cell.label, std::to_string(rec.replicate),
                       "ok", names[j], format_double(truth[j]),
                       format_double(rec.post_mean[j]), format_double(rec.lower[j]),
                       format_double(rec.upper[j]), rec.covered[j] ? "1" : "0"});
      }
    }
  }
  {
    barma::io::CsvWriter csv((dir / "cells.csv").string());
    csv.header({"cell", "label", "completed", "status", "parameter", "truth", "avg_post_mean",
                "avg_lower", "avg_upper", "coverage"});
    for (const auto& agg : report.cells) {
      const auto& cell = design.cells[agg.cell];
      const auto names = barma::parameter_names(cell.truth.order());
      const auto truth = cell.truth.flatten();
      for (std::size_t j = 0; j < names.size(); ++j) {
        csv.mixed_row({std::to_string(agg.cell), cell.label, std::to_string(agg.completed),
                       agg.ok ? "ok" : "failed", names[j], format_double(truth[j]),
                       format_double(agg.avg_mean[j]), format_double(agg.avg_lower[j]),
                       format_double(agg.avg_upper[j]), format_double(agg.coverage[j])});
      }
    }
  }
  if (!design.thresholds.empty()) {
    barma::io::CsvWriter csv((dir / "cell_roots.csv").string());
    csv.header({"cell", "label", "threshold", "avg_probability"});
    for (const auto& agg : report.cells) {
      const auto& cell = design.cells[agg.cell];
      if (agg.avg_root_probabilities.empty()) continue;
      for (std::size_t k = 0; k < design.thresholds.size(); ++k)
        csv.mixed_row({std::to_string(agg.cell), cell.label,
                       format_double(design.thresholds[k]),
                       format_double(agg.avg_root_probabilities[k])});
    }
  }

  Manifest manifest("mc-study");
  manifest.add("nu", nu_text);
  manifest.add("phi", phi_text);
  manifest.add("theta", theta_text);
  manifest.add("alpha", alpha);
  manifest.add("n", n_text);
  manifest.add("replicates", replicates);
  manifest.add("burn-in", burn_in);
  if (!prior_mean_text.empty()) manifest.add("prior-nu-mean", prior_mean_text);
  if (!prior_var_text.empty()) manifest.add("prior-nu-var", prior_var_text);
  manifest.add("chains", sampler.chains);
  manifest.add("iters", sampler.iters);
  manifest.add("warmup", sampler.warmup);
  manifest.add("link", link);
  manifest.add("thresholds", thresholds_text);
  manifest.add("seed", seed);
  manifest.add("threads", threads_flag);
  manifest.add("out", out);
  manifest.write(dir);

  std::size_t failed = 0;
  for (const auto& rec : report.replicates) failed += rec.ok ? 0 : 1;
  std::printf("mc-study: %zu cells x %zu replicates, %zu failures; wrote %s\n",
              design.cells.size(), design.replicates, failed, dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian beta-ARMA time series toolkit"};
  app.require_subcommand(1);
  app.fallthrough(true);  // lets `barma fit --config f` reach the global --config
  app.set_config("--config", "", "Read options from a manifest-style key=value file");
  app.allow_config_extras(true);

  std::uint64_t seed = 20240901;
  std::size_t threads = 0;
  std::string out = "barma_out";

  // fit
  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Sample the posterior of a beta-ARMA model");
  add_fit_options(fit, fit_args);
  fit->add_option("--seed", seed, "RNG seed")->capture_default_str();
  fit->add_option("--threads", threads, "Worker threads (0 = auto, env BARMA_THREADS)")
      ->capture_default_str();
  fit->add_option("--out", out, "Output directory")->capture_default_str();

  // forecast
  FitArgs forecast_args;
  std::size_t horizon = 6, holdout = 0;
  std::string future_path;
  auto* forecast = app.add_subcommand("forecast", "Posterior predictive forecasting");
  add_fit_options(forecast, forecast_args);
  forecast->add_option("--horizon", horizon, "Steps ahead")->capture_default_str();
  forecast->add_option("--holdout", holdout,
                       "Reserve the last k rows as actuals (fits on the rest)")
      ->capture_default_str();
  forecast->add_option("--future-covariates", future_path,
                       "CSV with future covariate rows (needed when r > 0 and no holdout)");
  forecast->add_option("--seed", seed, "RNG seed")->capture_default_str();
  forecast->add_option("--threads", threads, "Worker threads")->capture_default_str();
  forecast->add_option("--out", out, "Output directory")->capture_default_str();

  // simulate
  std::size_t sim_n = 500, sim_burn = 50;
  double sim_nu = 50.0, sim_alpha = 0.0;
  std::string sim_phi = "0.4", sim_theta = "0.4", sim_link = "logit";
  auto* simulate = app.add_subcommand("simulate", "Generate a beta-ARMA series");
  simulate->add_option("--n", sim_n, "Series length")->capture_default_str();
  simulate->add_option("--burn-in", sim_burn, "Burn-in discarded before the sample")
      ->capture_default_str();
  simulate->add_option("--nu", sim_nu, "Precision")->capture_default_str();
  simulate->add_option("--alpha", sim_alpha, "Intercept")->capture_default_str();
  simulate->add_option("--phi", sim_phi, "AR coefficients, comma separated ('' for none)")
      ->capture_default_str();
  simulate->add_option("--theta", sim_theta, "MA coefficients, comma separated ('' for none)")
      ->capture_default_str();
  simulate->add_option("--link", sim_link, "Link function")
      ->check(CLI::IsMember({"logit", "cloglog"}))
      ->capture_default_str();
  simulate->add_option("--seed", seed, "RNG seed")->capture_default_str();
  simulate->add_option("--out", out, "Output directory")->capture_default_str();

  // select
  std::string sel_input, sel_grid = "0,1;1,0;1,1;1,2;2,1", sel_link = "logit";
  PriorOpts sel_priors;
  SamplerOpts sel_sampler;
  std::size_t rungs = 30, rung_iters = 400;
  double rung_warmup = 0.5;
  auto* select = app.add_subcommand("select", "Bayes-factor order selection over a (p,q) grid");
  select->add_option("--input", sel_input, "Input CSV")->required();
  select->add_option("--grid", sel_grid, "Order grid 'p,q;p,q;...'")->capture_default_str();
  select->add_option("--link", sel_link, "Link function")
      ->check(CLI::IsMember({"logit", "cloglog"}))
      ->capture_default_str();
  add_prior_options(select, sel_priors);
  select->add_option("--rungs", rungs, "Stepping-stone temperature rungs")
      ->capture_default_str();
  select->add_option("--rung-iters", rung_iters, "Sampler iterations per rung")
      ->capture_default_str();
  select->add_option("--rung-warmup", rung_warmup, "Warmup fraction per rung")
      ->capture_default_str();
  select->add_option("--target-accept", sel_sampler.target_accept, "Acceptance target")
      ->capture_default_str();
  select->add_option("--max-depth", sel_sampler.max_depth, "Max NUTS tree depth")
      ->capture_default_str();
  select->add_option("--seed", seed, "RNG seed")->capture_default_str();
  select->add_option("--threads", threads, "Worker threads")->capture_default_str();
  select->add_option("--out", out, "Output directory")->capture_default_str();

  // unitroot
  std::string ur_draws, ur_thresholds = "1.01,1.02,1.03,1.04,1.05";
  auto* unitroot =
      app.add_subcommand("unitroot", "Quasi-unit-root probabilities from a draws.csv");
  unitroot->add_option("--draws", ur_draws, "draws.csv produced by fit")->required();
  unitroot->add_option("--thresholds", ur_thresholds, "Threshold grid")->capture_default_str();
  unitroot->add_option("--out", out, "Output directory")->capture_default_str();

  // mc-study
  std::string mc_nu = "50", mc_phi = "0.4", mc_theta = "0.4", mc_n = "500";
  std::string mc_prior_mean, mc_prior_var, mc_link = "logit";
  std::string mc_thresholds;
  double mc_alpha = 0.0;
  std::size_t mc_replicates = 10, mc_burn = 50;
  PriorOpts mc_priors;
  SamplerOpts mc_sampler;
  mc_sampler.chains = 2;
  auto* mc = app.add_subcommand("mc-study", "Monte Carlo simulation study harness");
  mc->add_option("--nu", mc_nu, "True nu values, ';' separated")->capture_default_str();
  mc->add_option("--phi", mc_phi, "AR cells: ',' within a vector, ';' between cells")
      ->capture_default_str();
  mc->add_option("--theta", mc_theta, "MA cells, zipped against --phi")->capture_default_str();
  mc->add_option("--alpha", mc_alpha, "True intercept")->capture_default_str();
  mc->add_option("--n", mc_n, "Sample sizes, ';' separated")->capture_default_str();
  mc->add_option("--replicates", mc_replicates, "Replicates per cell")->capture_default_str();
  mc->add_option("--burn-in", mc_burn, "Simulation burn-in")->capture_default_str();
  mc->add_option("--prior-nu-mean", mc_prior_mean, "Prior mean grid for nu, ';' separated");
  mc->add_option("--prior-nu-var", mc_prior_var, "Prior variance grid for nu, ';' separated");
  add_prior_options(mc, mc_priors);
  add_sampler_options(mc, mc_sampler);
  mc->add_option("--thresholds", mc_thresholds,
                 "Unit-root thresholds recorded per replicate (optional)");
  mc->add_option("--link", mc_link, "Link function")
      ->check(CLI::IsMember({"logit", "cloglog"}))
      ->capture_default_str();
  mc->add_option("--seed", seed, "RNG seed")->capture_default_str();
  mc->add_option("--threads", threads, "Worker threads")->capture_default_str();
  mc->add_option("--out", out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(fit_args, seed, threads, out);
    if (forecast->parsed())
      return cmd_forecast(forecast_args, horizon, holdout, future_path, seed, threads, out);
    if (simulate->parsed())
      return cmd_simulate(sim_n, sim_burn, sim_nu, sim_alpha, sim_phi, sim_theta, sim_link,
                          seed, out);
    if (select->parsed())
      return cmd_select(sel_input, sel_grid, sel_priors, sel_sampler, sel_link, rungs,
                        rung_iters, rung_warmup, seed, threads, out);
    if (unitroot->parsed()) return cmd_unitroot(ur_draws, ur_thresholds, out);
    if (mc->parsed())
      return cmd_mc_study(mc_nu, mc_phi, mc_theta, mc_alpha, mc_n, mc_replicates, mc_burn,
                          mc_prior_mean, mc_prior_var, mc_priors, mc_sampler, mc_link,
                          mc_thresholds, seed, threads, out);
  } catch (const barma::numeric_error& e) {
    std::cerr << "error[numeric]: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[numeric]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

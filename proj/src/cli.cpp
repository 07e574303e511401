#include "qij/cli.hpp"

#include "qij/format.hpp"
#include "qij/gibbs.hpp"
#include "qij/ij.hpp"
#include "qij/parallel.hpp"
#include "qij/point_est.hpp"
#include "qij/random.hpp"
#include "qij/simlab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <ostream>
#include <sstream>

#ifndef QIJ_VERSION
#define QIJ_VERSION "0.0.0"
#endif
#ifndef QIJ_DEFAULT_ENGEL_CSV
#define QIJ_DEFAULT_ENGEL_CSV "data/engel.csv"
#endif

namespace qij {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class OutputError : public Error {
 public:
  using Error::Error;
};

struct SamplerFlags {
  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  double half_t_scale = 2.5;
};

struct FitOptions {
  std::string input;
  std::string response;
  std::vector<std::string> covariates;
  std::string cluster;
  bool no_intercept = false;
  std::vector<double> taus;
  double sigma = 0.0;
  bool sigma_given = false;
  bool estimate_sigma = false;
  std::vector<std::string> methods;
  SamplerFlags sampler;
  std::uint64_t seed = 20240101;
  int boot_b = 200;
  double level = 0.95;
  std::string out;
  bool dump_draws = false;
  int threads = 0;
};

struct SimulateOptions {
  std::string model = "model2";
  int n = 200;
  int clusters = 50;
  int cluster_size = 10;
  double rho = 0.8;
  std::vector<double> taus;
  std::vector<double> sigmas;
  std::vector<std::string> methods;
  int reps = 100;
  std::uint64_t seed = 0;
  SamplerFlags sampler;
  int boot_b = 200;
  double level = 0.9;
  std::string out;
  int threads = 0;
};

struct EngelOptions {
  std::string input = QIJ_DEFAULT_ENGEL_CSV;
  std::vector<double> sigmas;
  SamplerFlags sampler;
  std::uint64_t seed = 20240101;
  int boot_b = 200;
  std::string out;
  int threads = 0;
};

void add_sampler_flags(CLI::App* cmd, SamplerFlags& s) {
  cmd->add_option("--chains", s.chains, "MCMC chains")->check(CLI::PositiveNumber);
  cmd->add_option("--warmup", s.warmup, "warmup sweeps per chain")->check(CLI::Range(100, 100000000));
  cmd->add_option("--draws", s.draws, "retained draws per chain")->check(CLI::Range(100, 100000000));
  cmd->add_option("--half-t-scale", s.half_t_scale, "scale of the half-t(3) prior on sigma")
      ->check(CLI::PositiveNumber);
}

json sampler_json(const SamplerFlags& s) {
  return {{"chains", s.chains}, {"warmup", s.warmup}, {"draws", s.draws},
          {"half_t_scale", s.half_t_scale}};
}

SamplerSettings sampler_settings(const SamplerFlags& s, std::uint64_t seed, int threads) {
  SamplerSettings out;
  out.chains = s.chains;
  out.warmup = s.warmup;
  out.draws_per_chain = s.draws;
  out.seed = seed;
  out.threads = threads;
  return out;
}

// Output files open in binary mode so bytes do not depend on the platform.
class OutputFile {
 public:
  explicit OutputFile(const fs::path& path) : path_(path), stream_(path, std::ios::binary) {
    if (!stream_) throw OutputError("cannot write '" + path.string() + "'");
  }
  std::ostream& stream() { return stream_; }
  void close() {
    stream_.close();
    if (!stream_) throw OutputError("failed writing '" + path_.string() + "'");
  }

 private:
  fs::path path_;
  std::ofstream stream_;
};

void write_json(const fs::path& path, const json& j) {
  OutputFile f(path);
  f.stream() << j.dump(2) << '\n';
  f.close();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory '" + dir.string() + "'");
}

std::string tau_tag(std::size_t index) { return "tau" + std::to_string(index); }

// ---- dataset analysis --------------------------------------------------

struct MethodRequest {
  std::string label;
  /// For "ald": take the model-based SD from the estimated-sigma run.
  bool estimated = false;
};

struct ResultRow {
  double tau;
  std::string method;
  std::string sigma_mode;
  std::string coefficient;
  double estimate;
  std::optional<double> se;
  std::optional<double> lower;
  std::optional<double> upper;
};

struct AnalysisOptions {
  std::vector<double> taus;
  std::vector<MethodRequest> methods;
  std::optional<double> sigma;
  SamplerFlags sampler;
  std::uint64_t seed = 0;
  int boot_b = 200;
  double level = 0.95;
  int threads = 1;
  std::optional<fs::path> draws_dir;
};

struct AnalysisResult {
  std::vector<ResultRow> rows;
  json runs = json::array();
  std::vector<std::string> files;
  double fixed_sigma = 0.0;
};

json diagnostics_json(const PosteriorDraws& d) {
  const ChainDiagnostics diag = diagnostics(d);
  json j;
  j["ess"] = std::vector<double>(diag.ess.data(), diag.ess.data() + diag.ess.size());
  if (diag.rhat) j["rhat"] = std::vector<double>(diag.rhat->data(), diag.rhat->data() + diag.rhat->size());
  return j;
}

void dump_draws(const fs::path& path, const PosteriorDraws& d, const std::vector<std::string>& names,
                const json& config, std::vector<std::string>& files) {
  OutputFile f(path);
  f.stream() << "# " << config.dump() << '\n';
  write_draws(f.stream(), d, names);
  f.close();
  files.push_back(path.filename().string());
}

AnalysisResult analyze(const RegressionData& data, const AnalysisOptions& opt, const json& config) {
  validate(data);
  const std::vector<std::string> names = coefficient_names(data);
  AnalysisResult result;

  bool need_fixed = false;
  bool need_estimated = false;
  for (const auto& m : opt.methods) {
    if (m.label == "ij" || (m.label == "ald" && m.estimated)) need_estimated = true;
    if (m.label == "ijf" || m.label == "yang" || (m.label == "ald" && !m.estimated)) need_fixed = true;
  }

  double sigma = 0.0;
  if (opt.sigma) {
    sigma = *opt.sigma;
  } else {
    // AL maximum-likelihood scale at the median fit.
    sigma = fit_check_loss(data, QuantileLevel(0.5)).objective / static_cast<double>(data.n());
  }
  if (!(sigma > 0.0)) throw InvalidArgument("fixed sigma must be positive (data fit exactly?)");
  result.fixed_sigma = sigma;
  const std::string fixed_mode = sigma_label(sigma);

  auto push = [&](double tau, const std::string& method, const std::string& mode,
                  const Eigen::VectorXd& est, const CovarianceEstimate* cov) {
    std::optional<IntervalSet> iv;
    if (cov) iv = intervals(est, *cov, opt.level);
    for (std::size_t k = 0; k < names.size(); ++k) {
      ResultRow row{tau, method, mode, names[k], est[static_cast<Eigen::Index>(k)], {}, {}, {}};
      if (iv) {
        row.se = iv->intervals[k].se;
        row.lower = iv->intervals[k].lower;
        row.upper = iv->intervals[k].upper;
      }
      result.rows.push_back(std::move(row));
    }
  };

  for (std::size_t t = 0; t < opt.taus.size(); ++t) {
    const QuantileLevel tau(opt.taus[t]);
    const FitResult fit = fit_check_loss(data, tau);
    push(tau.value(), "qr", "none", fit.beta_hat, nullptr);

    std::optional<PosteriorDraws> fixed;
    std::optional<PosteriorDraws> estimated;
    if (need_fixed) {
      fixed = run_sampler(data, tau, PriorConfig{FlatPrior{}, FixedSigma{sigma}},
                          sampler_settings(opt.sampler,
                                           derive_seed(opt.seed, {key(Stream::fixed_sampler), t}),
                                           opt.threads));
      result.runs.push_back({{"tau", tau.value()}, {"sigma_mode", fixed_mode},
                             {"diagnostics", diagnostics_json(*fixed)}});
      if (opt.draws_dir) {
        dump_draws(*opt.draws_dir / ("draws_" + tau_tag(t) + "_fixed.csv"), *fixed, names, config,
                   result.files);
      }
    }
    if (need_estimated) {
      estimated = run_sampler(
          data, tau, PriorConfig{FlatPrior{}, HalfT3Sigma{opt.sampler.half_t_scale}},
          sampler_settings(opt.sampler, derive_seed(opt.seed, {key(Stream::estimated_sampler), t}),
                           opt.threads));
      result.runs.push_back({{"tau", tau.value()}, {"sigma_mode", "estimated"},
                             {"diagnostics", diagnostics_json(*estimated)}});
      if (opt.draws_dir) {
        dump_draws(*opt.draws_dir / ("draws_" + tau_tag(t) + "_estimated.csv"), *estimated, names,
                   config, result.files);
      }
    }

    auto influence = [&](const PosteriorDraws& d) {
      return data.cluster ? ij_influence(d, *data.cluster) : ij_influence(d);
    };

    for (const auto& m : opt.methods) {
      if (m.label == "ald") {
        const PosteriorDraws& d = m.estimated ? *estimated : *fixed;
        const CovarianceEstimate cov = posterior_cov(d);
        push(tau.value(), "ald", m.estimated ? "estimated" : fixed_mode, posterior_mean(d), &cov);
      } else if (m.label == "ijf") {
        const CovarianceEstimate cov = ij_cov(influence(*fixed));
        push(tau.value(), "ijf", fixed_mode, posterior_mean(*fixed), &cov);
      } else if (m.label == "yang") {
        const CovarianceEstimate cov = yang_adjusted(*fixed, data);
        push(tau.value(), "yang", fixed_mode, posterior_mean(*fixed), &cov);
      } else if (m.label == "ij") {
        const CovarianceEstimate cov = ij_cov(influence(*estimated));
        push(tau.value(), "ij", "estimated", posterior_mean(*estimated), &cov);
      } else if (m.label == "boot") {
        BootstrapOptions bo;
        bo.replicates = opt.boot_b;
        bo.scheme = data.cluster ? BootstrapScheme::cluster : BootstrapScheme::pair;
        bo.seed = derive_seed(opt.seed, {key(Stream::bootstrap), t});
        bo.threads = opt.threads;
        const CovarianceEstimate cov = bootstrap_cov(data, tau, bo);
        push(tau.value(), "boot", "none", fit.beta_hat, &cov);
      }
    }
  }
  return result;
}

void write_results(const fs::path& path, const std::vector<ResultRow>& rows, const json& config) {
  OutputFile f(path);
  auto& os = f.stream();
  os << "# " << config.dump() << '\n';
  os << "tau,method,sigma_mode,coefficient,estimate,se,lower,upper\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    os << format_double(r.tau) << ',' << r.method << ',' << r.sigma_mode << ',' << r.coefficient
       << ',' << format_double(r.estimate) << ',' << opt(r.se) << ',' << opt(r.lower) << ','
       << opt(r.upper) << '\n';
  }
  f.close();
}

json manifest(const std::string& command, const json& config, std::uint64_t seed) {
  return {{"tool", "qij"}, {"version", QIJ_VERSION}, {"command", command},
          {"seed", seed},  {"config", config}};
}

std::vector<std::string> validate_methods(const std::vector<std::string>& methods,
                                          const std::vector<std::string>& allowed) {
  std::vector<std::string> errors;
  for (const auto& m : methods) {
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
      errors.push_back("unknown method '" + m + "'");
    }
  }
  return errors;
}

void fail_usage(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  - " + e;
  throw InvalidArgument(msg);
}

int cmd_fit(const FitOptions& o, std::ostream& out) {
  std::vector<std::string> errors =
      validate_methods(o.methods, {"ald", "ijf", "ij", "yang", "boot"});
  for (double t : o.taus) {
    if (!(t > 0.0 && t < 1.0)) errors.push_back("tau " + format_double(t) + " outside (0, 1)");
  }
  if (o.sigma_given && !(o.sigma > 0.0)) errors.emplace_back("--sigma must be positive");
  if (o.boot_b < 50) errors.emplace_back("--boot-b must be at least 50");
  if (!(o.level > 0.0 && o.level < 1.0)) errors.emplace_back("--level must lie in (0, 1)");
  if (!errors.empty()) fail_usage(errors);

  Formula formula;
  formula.response = ColumnSpec::parse(o.response);
  for (const auto& c : o.covariates) formula.covariates.push_back(ColumnSpec::parse(c));
  if (!o.cluster.empty()) formula.cluster = o.cluster;
  formula.intercept = !o.no_intercept;
  const RegressionData data = ingest_csv(o.input, formula);

  json config = {{"command", "fit"},
                 {"input", o.input},
                 {"response", o.response},
                 {"covariates", o.covariates},
                 {"cluster", o.cluster},
                 {"intercept", !o.no_intercept},
                 {"tau", o.taus},
                 {"sigma", o.sigma_given ? json(o.sigma) : json(nullptr)},
                 {"estimate_sigma", o.estimate_sigma},
                 {"methods", o.methods},
                 {"sampler", sampler_json(o.sampler)},
                 {"seed", o.seed},
                 {"boot_b", o.boot_b},
                 {"level", o.level},
                 {"dump_draws", o.dump_draws}};

  const fs::path dir(o.out);
  ensure_dir(dir);
  AnalysisOptions a;
  a.taus = o.taus;
  for (const auto& m : o.methods) a.methods.push_back({m, m == "ald" && o.estimate_sigma});
  if (o.sigma_given) a.sigma = o.sigma;
  a.sampler = o.sampler;
  a.seed = o.seed;
  a.boot_b = o.boot_b;
  a.level = o.level;
  a.threads = resolve_threads(o.threads);
  if (o.dump_draws) a.draws_dir = dir;

  AnalysisResult res = analyze(data, a, config);
  write_results(dir / "results.csv", res.rows, config);
  json man = manifest("fit", config, o.seed);
  man["n"] = data.n();
  man["p"] = data.p();
  man["clusters"] = data.cluster_count();
  man["fixed_sigma"] = res.fixed_sigma;
  man["runs"] = res.runs;
  std::vector<std::string> files{"results.csv"};
  files.insert(files.end(), res.files.begin(), res.files.end());
  man["outputs"] = files;
  write_json(dir / "manifest.json", man);
  out << "wrote " << (dir / "results.csv").string() << " (" << res.rows.size() << " rows)\n";
  return static_cast<int>(ExitCode::ok);
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  StudySpec spec;
  std::vector<std::string> errors;
  if (o.model == "model1") {
    spec.dgp.kind = Model1{};
  } else if (o.model == "model2") {
    spec.dgp.kind = Model2{};
  } else if (o.model == "clustered") {
    spec.dgp.kind = ClusteredModel{o.cluster_size, o.clusters, o.rho};
  } else {
    errors.push_back("unknown model '" + o.model + "'");
  }
  spec.dgp.n = o.n;
  spec.taus = o.taus.empty() ? std::vector<double>{0.5} : o.taus;
  spec.fixed_sigmas = o.sigmas;
  for (const auto& m : o.methods) {
    if (auto parsed = parse_method(m)) {
      spec.methods.push_back(*parsed);
    } else {
      errors.push_back("unknown method '" + m + "'");
    }
  }
  spec.replications = o.reps;
  spec.seed = o.seed;
  spec.sampler = sampler_settings(o.sampler, 0, 1);
  spec.half_t_scale = o.sampler.half_t_scale;
  spec.bootstrap_b = o.boot_b;
  spec.level = o.level;
  spec.threads = resolve_threads(o.threads);
  for (auto& e : validation_errors(spec)) errors.push_back(std::move(e));
  if (!errors.empty()) fail_usage(errors);
  for (const auto& w : validation_warnings(spec)) err << "warning: " << w << '\n';

  json config = {{"command", "simulate"},
                 {"model", o.model},
                 {"dgp", describe(spec.dgp.kind)},
                 {"n", o.n},
                 {"tau", spec.taus},
                 {"sigma", o.sigmas},
                 {"methods", o.methods},
                 {"reps", o.reps},
                 {"seed", o.seed},
                 {"sampler", sampler_json(o.sampler)},
                 {"boot_b", o.boot_b},
                 {"level", o.level}};

  const fs::path dir(o.out);
  ensure_dir(dir);
  const StudyResult result = run_study(spec);

  OutputFile table(dir / "study.csv");
  table.stream() << "# " << config.dump() << '\n';
  write_study_table(table.stream(), result);
  table.close();

  json man = manifest("simulate", config, o.seed);
  json failures = json::array();
  for (const auto& f : result.failures) failures.push_back({{"replication", f.replication}, {"error", f.message}});
  man["failures"] = failures;
  man["warnings"] = result.warnings;
  man["outputs"] = {"study.csv"};
  write_json(dir / "manifest.json", man);
  out << "wrote " << (dir / "study.csv").string() << " (" << result.rows.size() << " rows, "
      << result.failures.size() << " failed replications)\n";
  return static_cast<int>(ExitCode::ok);
}

int cmd_engel_demo(const EngelOptions& o, std::ostream& out) {
  const std::vector<double> sigmas =
      o.sigmas.empty() ? std::vector<double>{0.01, 0.1, 1.0, 10.0, 100.0} : o.sigmas;
  for (double s : sigmas) {
    if (!(s > 0.0)) fail_usage({"--sigma values must be positive"});
  }
  Formula formula;
  formula.response = ColumnSpec::parse("log(foodexp)");
  formula.covariates = {ColumnSpec::parse("log(income)")};
  const RegressionData data = ingest_csv(o.input, formula);

  json config = {{"command", "engel-demo"},
                 {"input", o.input},
                 {"sigma_grid", sigmas},
                 {"sampler", sampler_json(o.sampler)},
                 {"seed", o.seed},
                 {"boot_b", o.boot_b}};
  const fs::path dir(o.out);
  ensure_dir(dir);
  const int threads = resolve_threads(o.threads);

  AnalysisOptions a;
  a.taus = {0.25, 0.5, 0.75};
  a.methods = {{"ald", false}, {"ald", true}, {"ijf", false}, {"yang", false}, {"ij", false},
               {"boot", false}};
  a.sampler = o.sampler;
  a.seed = o.seed;
  a.boot_b = o.boot_b;
  a.threads = threads;
  const AnalysisResult res = analyze(data, a, config);
  write_results(dir / "engel_fit.csv", res.rows, config);

  // Posterior skew of the intercept at tau = 0.75 across fixed sigma.
  const QuantileLevel tau(0.75);
  const FitResult fit = fit_check_loss(data, tau);
  OutputFile curve(dir / "engel_skew.csv");
  curve.stream() << "# " << config.dump() << '\n';
  curve.stream() << "sigma,mean,median,mode_proxy,mle,mean_minus_median\n";
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    const PosteriorDraws d =
        run_sampler(data, tau, PriorConfig{FlatPrior{}, FixedSigma{sigmas[k]}},
                    sampler_settings(o.sampler, derive_seed(o.seed, {key(Stream::custom), k}), threads));
    Eigen::Index best = 0;
    d.loglik.rowwise().sum().maxCoeff(&best);
    const double mean = posterior_mean(d)[0];
    const double median = posterior_median(d)[0];
    curve.stream() << format_double(sigmas[k]) << ',' << format_double(mean) << ','
                   << format_double(median) << ',' << format_double(d.beta(best, 0)) << ','
                   << format_double(fit.beta_hat[0]) << ',' << format_double(mean - median) << '\n';
  }
  curve.close();

  json man = manifest("engel-demo", config, o.seed);
  man["fixed_sigma"] = res.fixed_sigma;
  man["runs"] = res.runs;
  man["outputs"] = {"engel_fit.csv", "engel_skew.csv"};
  write_json(dir / "manifest.json", man);
  out << "wrote " << (dir / "engel_fit.csv").string() << " and "
      << (dir / "engel_skew.csv").string() << '\n';
  return static_cast<int>(ExitCode::ok);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian quantile regression with infinitesimal-jackknife standard errors", "qij"};
  app.require_subcommand(1);
  app.set_version_flag("--version", QIJ_VERSION);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "analyze a CSV dataset");
  fit_cmd->add_option("--input,-i", fit.input, "CSV file with header row")->required();
  fit_cmd->add_option("--response,-y", fit.response, "response column, e.g. log(foodexp)")->required();
  fit_cmd->add_option("--covariate,-x", fit.covariates, "covariate column (repeatable)");
  fit_cmd->add_option("--cluster", fit.cluster, "cluster id column");
  fit_cmd->add_flag("--no-intercept", fit.no_intercept, "omit the intercept column");
  fit_cmd->add_option("--tau", fit.taus, "quantile level (repeatable)")->required();
  auto* sigma_opt = fit_cmd->add_option("--sigma", fit.sigma, "fixed AL scale (default: MLE at the median)");
  fit_cmd->add_flag("--estimate-sigma", fit.estimate_sigma,
                    "report model-based SEs from the estimated-sigma run");
  fit_cmd->add_option("--method", fit.methods, "ald|ijf|ij|yang|boot (repeatable)")->required();
  add_sampler_flags(fit_cmd, fit.sampler);
  fit_cmd->add_option("--seed", fit.seed, "master seed");
  fit_cmd->add_option("--boot-b", fit.boot_b, "bootstrap replicates");
  fit_cmd->add_option("--level", fit.level, "interval level");
  fit_cmd->add_option("--out,-o", fit.out, "output directory")->required();
  fit_cmd->add_flag("--dump-draws", fit.dump_draws, "write posterior draws");
  fit_cmd->add_option("--threads", fit.threads, "worker cap (default QIJ_THREADS or all cores)");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation study");
  sim_cmd->add_option("--model", sim.model, "model1|model2|clustered");
  sim_cmd->add_option("--n", sim.n, "sample size (model1/model2)");
  sim_cmd->add_option("--clusters", sim.clusters, "number of clusters J");
  sim_cmd->add_option("--cluster-size", sim.cluster_size, "units per cluster I");
  sim_cmd->add_option("--rho", sim.rho, "intraclass correlation of x");
  sim_cmd->add_option("--tau", sim.taus, "quantile level (repeatable)");
  sim_cmd->add_option("--sigma", sim.sigmas, "fixed AL scale grid (repeatable)");
  sim_cmd->add_option("--method", sim.methods, "ald|ijf|ij|yang|boot|ijf_unit|ij_unit")->required();
  sim_cmd->add_option("--reps", sim.reps, "replications");
  sim_cmd->add_option("--seed", sim.seed, "master seed")->required();
  add_sampler_flags(sim_cmd, sim.sampler);
  sim_cmd->add_option("--boot-b", sim.boot_b, "bootstrap replicates");
  sim_cmd->add_option("--level", sim.level, "interval level for coverage");
  sim_cmd->add_option("--out,-o", sim.out, "output directory")->required();
  sim_cmd->add_option("--threads", sim.threads, "worker cap (default QIJ_THREADS or all cores)");

  EngelOptions engel;
  auto* engel_cmd = app.add_subcommand("engel-demo", "Engel food-expenditure comparison");
  engel_cmd->add_option("--input,-i", engel.input, "Engel CSV (income,foodexp)");
  engel_cmd->add_option("--sigma", engel.sigmas, "fixed sigma grid for the skew curve");
  add_sampler_flags(engel_cmd, engel.sampler);
  engel_cmd->add_option("--seed", engel.seed, "master seed");
  engel_cmd->add_option("--boot-b", engel.boot_b, "bootstrap replicates");
  engel_cmd->add_option("--out,-o", engel.out, "output directory")->required();
  engel_cmd->add_option("--threads", engel.threads, "worker cap");

  std::vector<std::string> argv_storage{"qij"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }
  fit.sigma_given = sigma_opt->count() > 0;

  try {
    if (*fit_cmd) return cmd_fit(fit, out);
    if (*sim_cmd) return cmd_simulate(sim, out, err);
    if (*engel_cmd) return cmd_engel_demo(engel, out);
  } catch (const FileNotFound& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::missing_file);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::bad_input);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::output);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::computation);
  }
  return static_cast<int>(ExitCode::usage);
}

}  // namespace qij

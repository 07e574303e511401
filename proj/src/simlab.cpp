#include "qij/simlab.hpp"

#include "qij/format.hpp"
#include "qij/parallel.hpp"
#include "qij/point_est.hpp"
#include "qij/random.hpp"
#include "qij/stats.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <random>

namespace qij {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// One (method, tau, sigma) combination evaluated in every replication.
struct Cell {
  std::string method;
  std::size_t tau_index;
  std::optional<double> fixed_sigma;
  std::string sigma_mode;
  std::optional<Method> builtin;
  std::size_t custom_index = 0;
};

std::vector<Cell> build_cells(const StudySpec& spec) {
  std::vector<Cell> cells;
  for (std::size_t t = 0; t < spec.taus.size(); ++t) {
    for (Method m : spec.methods) {
      if (uses_fixed_sigma(m)) {
        for (double s : spec.fixed_sigmas) {
          cells.push_back({to_string(m), t, s, sigma_label(s), m});
        }
      } else if (m == Method::boot) {
        cells.push_back({to_string(m), t, std::nullopt, "none", m});
      } else {
        cells.push_back({to_string(m), t, std::nullopt, sigma_label(std::nullopt), m});
      }
    }
    for (std::size_t c = 0; c < spec.custom_methods.size(); ++c) {
      cells.push_back({spec.custom_methods[c].label, t, std::nullopt, "none", std::nullopt, c});
    }
  }
  return cells;
}

MethodOutput bayes_output(const PosteriorDraws& draws, const CovarianceEstimate& cov) {
  return {posterior_mean(draws), cov.standard_errors()};
}

// Evaluates every cell for one replication, running each sampler once.
class ReplicationRunner {
 public:
  ReplicationRunner(const StudySpec& spec, const RegressionData& data, int replication)
      : spec_(spec), data_(data), replication_(static_cast<std::uint64_t>(replication)) {}

  MethodOutput evaluate(const Cell& cell) {
    const QuantileLevel tau(spec_.taus[cell.tau_index]);
    if (!cell.builtin) return spec_.custom_methods[cell.custom_index].fit(data_, tau);

    const Method m = *cell.builtin;
    switch (m) {
      case Method::ald: {
        const auto& d = fixed_draws(cell.tau_index, *cell.fixed_sigma);
        return bayes_output(d, posterior_cov(d));
      }
      case Method::ijf:
      case Method::ijf_unit: {
        const auto& d = fixed_draws(cell.tau_index, *cell.fixed_sigma);
        return bayes_output(d, ij_cov(influence(d, m == Method::ijf)));
      }
      case Method::yang: {
        const auto& d = fixed_draws(cell.tau_index, *cell.fixed_sigma);
        return bayes_output(d, yang_adjusted(d, data_));
      }
      case Method::ij:
      case Method::ij_unit: {
        const auto& d = estimated_draws(cell.tau_index);
        return bayes_output(d, ij_cov(influence(d, m == Method::ij)));
      }
      case Method::boot: {
        const FitResult fit = fit_check_loss(data_, tau);
        BootstrapOptions opts;
        opts.replicates = spec_.bootstrap_b;
        opts.scheme = data_.clustered() ? BootstrapScheme::cluster : BootstrapScheme::pair;
        opts.seed = derive_seed(spec_.seed, {key(Stream::replicate), replication_,
                                             key(Stream::bootstrap), cell.tau_index});
        return {fit.beta_hat, bootstrap_cov(data_, tau, opts).standard_errors()};
      }
    }
    throw InvalidArgument("unknown method");
  }

 private:
  InfluenceSet influence(const PosteriorDraws& d, bool cluster_aware) const {
    if (cluster_aware && data_.cluster) return ij_influence(d, *data_.cluster);
    return ij_influence(d);
  }

  SamplerSettings settings(Stream purpose, std::size_t tau_index) const {
    SamplerSettings s = spec_.sampler;
    s.threads = 1;
    // Shared across sigma values so fixed-sigma runs use matched streams.
    s.seed = derive_seed(spec_.seed, {key(Stream::replicate), replication_, key(purpose), tau_index});
    return s;
  }

  const PosteriorDraws& fixed_draws(std::size_t tau_index, double sigma) {
    auto k = std::make_pair(tau_index, sigma);
    auto it = fixed_.find(k);
    if (it != fixed_.end()) return it->second;
    PriorConfig prior{FlatPrior{}, FixedSigma{sigma}};
    auto draws = run_sampler(data_, QuantileLevel(spec_.taus[tau_index]), prior,
                             settings(Stream::fixed_sampler, tau_index));
    return fixed_.emplace(k, std::move(draws)).first->second;
  }

  const PosteriorDraws& estimated_draws(std::size_t tau_index) {
    auto it = estimated_.find(tau_index);
    if (it != estimated_.end()) return it->second;
    PriorConfig prior{FlatPrior{}, HalfT3Sigma{spec_.half_t_scale}};
    auto draws = run_sampler(data_, QuantileLevel(spec_.taus[tau_index]), prior,
                             settings(Stream::estimated_sampler, tau_index));
    return estimated_.emplace(tau_index, std::move(draws)).first->second;
  }

  const StudySpec& spec_;
  const RegressionData& data_;
  std::uint64_t replication_;
  std::map<std::pair<std::size_t, double>, PosteriorDraws> fixed_;
  std::map<std::size_t, PosteriorDraws> estimated_;
};

}  // namespace

void validate(const DGPConfig& config) {
  std::visit(overloaded{[&](const Model1&) {
                          if (config.n < 3) throw InvalidArgument("model1 needs n >= 3");
                        },
                        [&](const Model2&) {
                          if (config.n < 3) throw InvalidArgument("model2 needs n >= 3");
                        },
                        [](const ClusteredModel& c) {
                          if (c.cluster_size < 2) throw InvalidArgument("clustered model needs I >= 2");
                          if (c.clusters < 2) throw InvalidArgument("clustered model needs J >= 2");
                          if (!(c.rho >= 0.0 && c.rho < 1.0)) {
                            throw InvalidArgument("intraclass correlation must lie in [0, 1)");
                          }
                        }},
             config.kind);
}

std::string describe(const DgpKind& kind) {
  return std::visit(
      overloaded{[](const Model1& m) {
                   return "model1(alpha=" + format_double(m.alpha) + ",beta=" + format_double(m.beta) + ")";
                 },
                 [](const Model2& m) {
                   return "model2(alpha=" + format_double(m.alpha) + ",beta=" + format_double(m.beta) +
                          ",gamma=" + format_double(m.gamma) + ")";
                 },
                 [](const ClusteredModel& c) {
                   return "clustered(I=" + std::to_string(c.cluster_size) +
                          ",J=" + std::to_string(c.clusters) + ",rho=" + format_double(c.rho) + ")";
                 }},
      kind);
}

RegressionData generate(const DGPConfig& config) {
  validate(config);
  Rng rng(config.seed);
  std::normal_distribution<double> normal;
  RegressionData data;

  std::visit(overloaded{
                 [&](const Model1& m) {
                   data.y.resize(config.n);
                   data.X.resize(config.n, 2);
                   for (int i = 0; i < config.n; ++i) {
                     const double x = normal(rng);
                     const double e = normal(rng);
                     data.X(i, 0) = 1.0;
                     data.X(i, 1) = x;
                     data.y[i] = m.alpha + m.beta * x + e;
                   }
                   data.coefficient_names = {"intercept", "x"};
                 },
                 [&](const Model2& m) {
                   data.y.resize(config.n);
                   data.X.resize(config.n, 2);
                   for (int i = 0; i < config.n; ++i) {
                     const double x = normal(rng);
                     const double e = normal(rng);
                     data.X(i, 0) = 1.0;
                     data.X(i, 1) = x;
                     data.y[i] = m.alpha + m.beta * x + (1.0 + m.gamma * x) * e;
                   }
                   data.coefficient_names = {"intercept", "x"};
                 },
                 [&](const ClusteredModel& c) {
                   const int n = c.cluster_size * c.clusters;
                   data.y.resize(n);
                   data.X.resize(n, 3);
                   std::vector<int> labels(static_cast<std::size_t>(n));
                   const double a = std::sqrt(c.rho);
                   const double b = std::sqrt(1.0 - c.rho);
                   const double u_sd = std::sqrt(1.0 / 3.0);
                   int i = 0;
                   for (int j = 0; j < c.clusters; ++j) {
                     const double z = normal(rng);
                     for (int k = 0; k < c.cluster_size; ++k, ++i) {
                       const double x = a * z + b * normal(rng);
                       const double u = u_sd * normal(rng);
                       data.X(i, 0) = 1.0;
                       data.X(i, 1) = x;
                       data.X(i, 2) = x * x;
                       data.y[i] = u / 10.0 + x + x * x * u;
                       labels[static_cast<std::size_t>(i)] = j;
                     }
                   }
                   data.cluster = std::move(labels);
                   data.coefficient_names = {"intercept", "x", "x2"};
                 }},
             config.kind);
  return data;
}

VectorXd truth(const DGPConfig& config, QuantileLevel tau) {
  const double q = normal_quantile(tau.value());
  return std::visit(overloaded{[&](const Model1& m) {
                                 VectorXd v(2);
                                 v << m.alpha + q, m.beta;
                                 return v;
                               },
                               [&](const Model2& m) {
                                 VectorXd v(2);
                                 v << m.alpha + q, m.beta + m.gamma * q;
                                 return v;
                               },
                               [&](const ClusteredModel&) {
                                 VectorXd v(3);
                                 v << q / std::sqrt(300.0), 1.0, q / std::sqrt(3.0);
                                 return v;
                               }},
                    config.kind);
}

RelativeErrorSummary relative_error(std::span<const double> se_sq, std::span<const double> estimates,
                                    const std::string& method, const std::string& coefficient) {
  if (se_sq.size() != estimates.size()) {
    throw DimensionMismatch("relative error needs one squared SE per estimate");
  }
  if (estimates.size() < 2) throw InvalidArgument("relative error needs m >= 2");
  const double var_est = sample_variance(estimates);
  if (!(var_est > 0.0)) throw ZeroVariance(method, coefficient);
  const double mean_se_sq = mean(se_sq);
  const double m = static_cast<double>(estimates.size());
  const double re = std::sqrt(mean_se_sq / var_est) - 1.0;
  const double mce =
      (re + 1.0) * std::sqrt(sample_variance(se_sq) / (var_est * var_est) + 1.0 / (2.0 * m - 1.0));
  return {re, mce, re - 1.96 * mce, re + 1.96 * mce, mean_se_sq, var_est};
}

CoverageSummary coverage_from_hits(int hits, int m) {
  if (m < 1) throw InvalidArgument("coverage needs at least one interval");
  const ProportionInterval ci = clopper_pearson(hits, m, 0.95);
  return {static_cast<double>(hits) / m, ci.lower, ci.upper, hits, m};
}

CoverageSummary coverage(std::span<const IntervalSet> sets, std::size_t coefficient,
                         double true_value) {
  int hits = 0;
  for (const auto& set : sets) {
    if (coefficient >= set.intervals.size()) throw DimensionMismatch("coefficient out of range");
    const Interval& iv = set.intervals[coefficient];
    if (iv.lower <= true_value && true_value <= iv.upper) ++hits;
  }
  return coverage_from_hits(hits, static_cast<int>(sets.size()));
}

std::string to_string(Method method) {
  switch (method) {
    case Method::ald: return "ald";
    case Method::ijf: return "ijf";
    case Method::ij: return "ij";
    case Method::yang: return "yang";
    case Method::boot: return "boot";
    case Method::ijf_unit: return "ijf_unit";
    case Method::ij_unit: return "ij_unit";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& label) {
  for (Method m : {Method::ald, Method::ijf, Method::ij, Method::yang, Method::boot,
                   Method::ijf_unit, Method::ij_unit}) {
    if (to_string(m) == label) return m;
  }
  return std::nullopt;
}

bool uses_fixed_sigma(Method method) {
  return method == Method::ald || method == Method::ijf || method == Method::yang ||
         method == Method::ijf_unit;
}

std::string sigma_label(std::optional<double> fixed_sigma) {
  return fixed_sigma ? "fixed:" + format_double(*fixed_sigma) : "estimated";
}

std::vector<std::string> validation_errors(const StudySpec& spec) {
  std::vector<std::string> errors;
  try {
    validate(spec.dgp);
  } catch (const Error& e) {
    errors.emplace_back(e.what());
  }
  if (spec.taus.empty()) errors.emplace_back("at least one quantile level is required");
  for (double t : spec.taus) {
    if (!(t > 0.0 && t < 1.0)) errors.push_back("quantile level " + format_double(t) + " outside (0, 1)");
  }
  for (double s : spec.fixed_sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) errors.push_back("fixed sigma " + format_double(s) + " must be positive");
  }
  if (spec.methods.empty() && spec.custom_methods.empty()) errors.emplace_back("no methods requested");
  bool needs_fixed = false;
  for (Method m : spec.methods) needs_fixed = needs_fixed || uses_fixed_sigma(m);
  if (needs_fixed && spec.fixed_sigmas.empty()) {
    errors.emplace_back("fixed-sigma methods (ald, ijf, yang) need at least one fixed sigma");
  }
  if (spec.replications < 2) errors.emplace_back("need at least 2 replications");
  if (spec.sampler.chains < 1) errors.emplace_back("need at least one chain");
  if (spec.sampler.warmup < 100) errors.emplace_back("warmup must be at least 100");
  if (spec.sampler.draws_per_chain < 100) errors.emplace_back("draws per chain must be at least 100");
  if (!(spec.half_t_scale > 0.0)) errors.emplace_back("half-t scale must be positive");
  for (Method m : spec.methods) {
    if (m == Method::boot && spec.bootstrap_b < 50) {
      errors.emplace_back("bootstrap B must be at least 50");
      break;
    }
  }
  if (!(spec.level > 0.0 && spec.level < 1.0)) errors.emplace_back("interval level must lie in (0, 1)");
  return errors;
}

std::vector<std::string> validation_warnings(const StudySpec& spec) {
  std::vector<std::string> warnings;
  if (const auto* c = std::get_if<ClusteredModel>(&spec.dgp.kind); c && c->clusters <= 10) {
    warnings.emplace_back("J <= 10 clusters: no standard-error method is reliable here, "
                          "especially at extreme quantiles");
  }
  if (spec.replications < 20) warnings.emplace_back("fewer than 20 replications");
  return warnings;
}

StudyResult run_study(const StudySpec& spec) {
  if (auto errors = validation_errors(spec); !errors.empty()) {
    std::string msg = "invalid study configuration:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw InvalidArgument(msg);
  }
  const std::vector<Cell> cells = build_cells(spec);
  const auto m = static_cast<std::size_t>(spec.replications);

  std::vector<std::vector<MethodOutput>> outputs(m);
  std::vector<std::optional<std::string>> errors(m);

  parallel_for(m, resolve_threads(spec.threads), [&](std::size_t r) {
    try {
      DGPConfig dgp = spec.dgp;
      dgp.seed = derive_seed(spec.seed, {key(Stream::replicate), r, key(Stream::data)});
      const RegressionData data = generate(dgp);
      ReplicationRunner runner(spec, data, static_cast<int>(r));
      std::vector<MethodOutput> row;
      row.reserve(cells.size());
      for (const Cell& cell : cells) row.push_back(runner.evaluate(cell));
      outputs[r] = std::move(row);
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });

  StudyResult result;
  result.replications = spec.replications;
  result.warnings = validation_warnings(spec);
  for (std::size_t r = 0; r < m; ++r) {
    if (errors[r]) result.failures.push_back({static_cast<int>(r), *errors[r]});
  }
  if (static_cast<double>(result.failures.size()) > 0.02 * static_cast<double>(m)) {
    throw StudyFailed(std::to_string(result.failures.size()) + " of " + std::to_string(m) +
                          " replications failed; first: " + result.failures.front().message,
                      result.failures);
  }

  const double z = normal_quantile(0.5 * (1.0 + spec.level));
  DGPConfig truth_cfg = spec.dgp;
  std::vector<std::string> names;
  {
    DGPConfig probe = spec.dgp;
    probe.seed = 0;
    names = coefficient_names(generate(probe));
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    const VectorXd true_coef = truth(truth_cfg, QuantileLevel(spec.taus[cell.tau_index]));
    for (std::size_t k = 0; k < names.size(); ++k) {
      std::vector<double> se_sq;
      std::vector<double> est;
      std::vector<IntervalSet> sets;
      double se_sum = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        if (errors[r]) continue;
        const MethodOutput& out = outputs[r][c];
        if (static_cast<std::size_t>(out.estimate.size()) != names.size() ||
            static_cast<std::size_t>(out.se.size()) != names.size()) {
          throw DimensionMismatch("method '" + cell.method + "' returned wrong dimension");
        }
        const double e = out.estimate[static_cast<Index>(k)];
        const double s = out.se[static_cast<Index>(k)];
        se_sq.push_back(s * s);
        est.push_back(e);
        se_sum += s;
        IntervalSet set{{}, spec.level};
        set.intervals.resize(names.size(), Interval{0, 0, 0, 0});
        set.intervals[k] = {e, s, e - z * s, e + z * s};
        sets.push_back(std::move(set));
      }
      StudyRow row;
      row.method = cell.method;
      row.tau = spec.taus[cell.tau_index];
      row.sigma_mode = cell.sigma_mode;
      row.coefficient = names[k];
      row.metrics.re = relative_error(se_sq, est, cell.method, names[k]);
      row.metrics.cov = coverage(sets, k, true_coef[static_cast<Index>(k)]);
      row.metrics.m = static_cast<int>(est.size());
      row.metrics.mean_se = se_sum / static_cast<double>(est.size());
      row.metrics.mean_estimate = mean(est);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

const StudyRow& find_row(const StudyResult& result, const std::string& method, double tau,
                         const std::string& sigma_mode, const std::string& coefficient) {
  for (const auto& row : result.rows) {
    if (row.method == method && std::abs(row.tau - tau) < 1e-12 && row.sigma_mode == sigma_mode &&
        row.coefficient == coefficient) {
      return row;
    }
  }
  throw InvalidArgument("no study row for " + method + " tau=" + format_double(tau) + " " +
                        sigma_mode + " " + coefficient);
}

void write_study_table(std::ostream& out, const StudyResult& result) {
  out << "method,tau,sigma_mode,coefficient,R_e,MCe,re_lo,re_hi,coverage,cov_lo,cov_hi,m\n";
  for (const auto& row : result.rows) {
    const auto& mt = row.metrics;
    out << row.method << ',' << format_double(row.tau) << ',' << row.sigma_mode << ','
        << row.coefficient << ',' << format_double(mt.re.relative_error) << ','
        << format_double(mt.re.mc_error) << ',' << format_double(mt.re.lower) << ','
        << format_double(mt.re.upper) << ',' << format_double(mt.cov.coverage) << ','
        << format_double(mt.cov.lower) << ',' << format_double(mt.cov.upper) << ',' << mt.m
        << '\n';
  }
}

}  // namespace qij

#pragma once

#include "qij/ald.hpp"
#include "qij/data.hpp"
#include "qij/error.hpp"
#include "qij/gibbs.hpp"
#include "qij/ij.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qij {

/// y = alpha + beta x + e, x ~ N(0, 1), e ~ N(0, 1).
struct Model1 {
  double alpha = 2.0;
  double beta = 2.0;
};

/// y = alpha + beta x + (1 + gamma x) e.
struct Model2 {
  double alpha = 2.0;
  double beta = 2.0;
  double gamma = 0.3;
};

/// J clusters of I units: x_ij = sqrt(rho) z_j + sqrt(1 - rho) e_ij,
/// y_ij = u_ij / 10 + x_ij + x_ij^2 u_ij with u_ij ~ N(0, 1/3). The design
/// has columns (1, x, x^2).
struct ClusteredModel {
  int cluster_size = 10;
  int clusters = 50;
  double rho = 0.8;
};

using DgpKind = std::variant<Model1, Model2, ClusteredModel>;

struct DGPConfig {
  DgpKind kind = Model1{};
  /// Sample size for Model1 / Model2; ignored for the clustered model.
  int n = 200;
  std::uint64_t seed = 0;
};

void validate(const DGPConfig& config);
std::string describe(const DgpKind& kind);

RegressionData generate(const DGPConfig& config);

/// Coefficients of the true conditional tau-quantile function.
Eigen::VectorXd truth(const DGPConfig& config, QuantileLevel tau);

struct RelativeErrorSummary {
  double relative_error;
  double mc_error;
  double lower;
  double upper;
  double mean_se_sq;
  double estimate_variance;
};

/// R_e = sqrt(mean(se^2) / var(est)) - 1,
/// MCe = (R_e + 1) sqrt(var(se^2) / var(est)^2 + 1 / (2m - 1)),
/// interval R_e +- 1.96 MCe. Throws ZeroVariance when var(est) == 0.
RelativeErrorSummary relative_error(std::span<const double> se_sq, std::span<const double> estimates,
                                    const std::string& method = "?",
                                    const std::string& coefficient = "?");

struct CoverageSummary {
  double coverage;
  double lower;
  double upper;
  int hits;
  int m;
};

/// Share of intervals for `coefficient` containing `true_value`, with an
/// exact binomial 95% interval.
CoverageSummary coverage(std::span<const IntervalSet> intervals, std::size_t coefficient,
                         double true_value);
CoverageSummary coverage_from_hits(int hits, int m);

struct MetricSummary {
  RelativeErrorSummary re;
  CoverageSummary cov;
  double mean_se;
  double mean_estimate;
  int m;
};

enum class Method { ald, ijf, ij, yang, boot, ijf_unit, ij_unit };

std::string to_string(Method method);
std::optional<Method> parse_method(const std::string& label);
/// True for methods evaluated once per fixed sigma value.
bool uses_fixed_sigma(Method method);

/// Point estimates and standard errors for one dataset.
struct MethodOutput {
  Eigen::VectorXd estimate;
  Eigen::VectorXd se;
};

/// User-supplied estimator evaluated once per replication and tau.
struct CustomMethod {
  std::string label;
  std::function<MethodOutput(const RegressionData&, QuantileLevel)> fit;
};

struct StudySpec {
  DGPConfig dgp;
  std::vector<double> taus{0.5};
  std::vector<double> fixed_sigmas;
  std::vector<Method> methods;
  std::vector<CustomMethod> custom_methods;
  int replications = 100;
  std::uint64_t seed = 0;
  SamplerSettings sampler;
  double half_t_scale = 2.5;
  int bootstrap_b = 200;
  double level = 0.9;
  int threads = 1;
};

/// All problems with a spec, empty when valid.
std::vector<std::string> validation_errors(const StudySpec& spec);
/// Valid but questionable settings (e.g. J <= 10 clusters).
std::vector<std::string> validation_warnings(const StudySpec& spec);

struct StudyRow {
  std::string method;
  double tau;
  /// "fixed:<value>", "estimated" or "none".
  std::string sigma_mode;
  std::string coefficient;
  MetricSummary metrics;
};

struct ReplicationFailure {
  int replication;
  std::string message;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<ReplicationFailure> failures;
  std::vector<std::string> warnings;
  int replications = 0;
};

/// Raised when more than 2% of replications fail.
class StudyFailed : public Error {
 public:
  StudyFailed(std::string message, std::vector<ReplicationFailure> failures)
      : Error(std::move(message)), failures_(std::move(failures)) {}
  const std::vector<ReplicationFailure>& failures() const noexcept { return failures_; }

 private:
  std::vector<ReplicationFailure> failures_;
};

/// Generates `replications` datasets and evaluates every requested method,
/// tau and sigma setting on each. Replication r draws its data from
/// derive_seed(seed, {replicate, r, data}) and its samplers from sibling
/// streams, so the result depends on neither thread count nor method list.
StudyResult run_study(const StudySpec& spec);

/// Lookup helper; throws InvalidArgument when the row is absent.
const StudyRow& find_row(const StudyResult& result, const std::string& method, double tau,
                         const std::string& sigma_mode, const std::string& coefficient);

std::string sigma_label(std::optional<double> fixed_sigma);

/// Flat CSV: method,tau,sigma_mode,coefficient,R_e,MCe,re_lo,re_hi,coverage,cov_lo,cov_hi,m
void write_study_table(std::ostream& out, const StudyResult& result);

}  // namespace qij

#pragma once

#include <span>

namespace qij {

double normal_cdf(double x);

/// Standard-normal quantile. Rational approximation refined by one Halley
/// step; absolute error below 1e-12 on (1e-300, 1 - 1e-16).
double normal_quantile(double p);

struct ProportionInterval {
  double lower;
  double upper;
};

/// Exact (Clopper-Pearson) interval for a binomial proportion with
/// `successes` out of `trials` at the given two-sided confidence level.
ProportionInterval clopper_pearson(int successes, int trials, double level = 0.95);

double mean(std::span<const double> xs);
/// Sample variance with denominator m - 1.
double sample_variance(std::span<const double> xs);
/// Median; midpoint of the two central order statistics for even length.
double median(std::span<const double> xs);

}  // namespace qij

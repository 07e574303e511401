#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double loss(double u, double tau) { return u < 0.0 ? (tau - 1.0) * u : tau * u; }

/// Closed-form AL CDF, piecewise exponential around the location.
inline double al_cdf(double y, double mu, double sigma, double tau) {
  const double z = (y - mu) / sigma;
  if (z < 0.0) return tau * std::exp((1.0 - tau) * z);
  return 1.0 - (1.0 - tau) * std::exp(-tau * z);
}

/// log Binomial(m, p) pmf at k.
inline double log_binom_pmf(int k, int m, double p) {
  return std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) +
         (k > 0 ? k * std::log(p) : 0.0) + (m - k > 0 ? (m - k) * std::log1p(-p) : 0.0);
}

/// P(X >= k) for X ~ Binomial(m, p), by direct summation.
inline double binom_upper_tail(int k, int m, double p) {
  double s = 0.0;
  for (int j = k; j <= m; ++j) s += std::exp(log_binom_pmf(j, m, p));
  return s;
}

inline double binom_lower_tail(int k, int m, double p) {
  double s = 0.0;
  for (int j = 0; j <= k; ++j) s += std::exp(log_binom_pmf(j, m, p));
  return s;
}

/// Root of a monotone function on [lo, hi] by plain bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_var(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace oracle

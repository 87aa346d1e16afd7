#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <utility>
#include <vector>

#include "tadsie/rng.hpp"

namespace tadsie::stats {

// Five-number box-plot summary with Tukey 1.5*IQR whiskers. Whiskers sit on
// the most extreme data points inside the fences; everything beyond them is
// counted as an outlier.
struct BoxSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::size_t n_outliers = 0;
};

// Two-sided test outcome: reject iff |statistic| > critical_value.
struct TestDecision {
  bool reject = false;
  double statistic = 0.0;
  double critical_value = 0.0;
};

// Standard normal CDF.
double normal_cdf(double x);

// Inverse standard normal CDF for p in (0,1). Rational approximation plus
// one Halley refinement; absolute error well below 1e-9 everywhere.
double normal_quantile(double p);

// Student's t distribution, used for Welch critical values.
double students_t_cdf(double x, double dof);
double students_t_quantile(double p, double dof);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// (mean, unbiased sample variance). Requires length >= 2.
std::pair<double, double> sample_stats(Eigen::Ref<const Eigen::VectorXd> values);

// Quantile of a sorted sequence by linear interpolation between order
// statistics (position p*(n-1)).
double sorted_quantile(const std::vector<double>& sorted, double p);

BoxSummary box_summary(Eigen::Ref<const Eigen::VectorXd> values);
BoxSummary box_summary(const std::vector<double>& values);

// Welch two-sample t-test (unequal variances), two-sided at level alpha.
// Degrees of freedom are floored only when looking up the critical value.
TestDecision welch_t_test(Eigen::Ref<const Eigen::VectorXd> a,
                          Eigen::Ref<const Eigen::VectorXd> b, double alpha);

// Ordinary least squares y ~ intercept + slope * x, with the fit quality and
// the slope's t-statistic against zero.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_t = 0.0;
};

LinearFit linear_fit(Eigen::Ref<const Eigen::VectorXd> x,
                     Eigen::Ref<const Eigen::VectorXd> y);

// n indices drawn uniformly with replacement from [0, n_rows).
std::vector<std::size_t> bootstrap_indices(std::size_t n_rows, std::size_t n,
                                           RngStream& rng);

template <class T>
std::vector<T> bootstrap_resample(const std::vector<T>& rows, std::size_t n,
                                  RngStream& rng) {
  const auto idx = bootstrap_indices(rows.size(), n, rng);
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(rows[i]);
  return out;
}

}  // namespace tadsie::stats

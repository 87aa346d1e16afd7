#include "tadsie/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tadsie/errors.hpp"

namespace tadsie::stats {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;

// Acklam's rational approximation to the inverse normal CDF.
double acklam_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double students_t_pdf(double x, double dof) {
  const double lg = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof);
  return std::exp(lg - 0.5 * std::log(dof * M_PI) -
                  0.5 * (dof + 1.0) * std::log1p(x * x / dof));
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("normal_quantile: p must lie in (0,1)");
  double x = acklam_quantile(p);
  // One Halley step against the exact CDF.
  const double e = normal_cdf(x) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0)
    throw std::domain_error("incomplete_beta: x must lie in [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  // I_x(a,b) by the modified Lentz continued fraction; swap tails for
  // convergence when x is past the mean.
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double tiny = 1e-300;
  double f = 1.0, c = 1.0, d = 0.0;
  for (int i = 0; i <= 300; ++i) {
    const int m = i / 2;
    double numerator;
    if (i == 0) {
      numerator = 1.0;
    } else if (i % 2 == 0) {
      numerator = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
    } else {
      numerator = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
    }
    d = 1.0 + numerator * d;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = 1.0 + numerator / c;
    if (std::abs(c) < tiny) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(ln_front) * (f - 1.0) / a;
}

double students_t_cdf(double x, double dof) {
  if (!(dof > 0.0)) throw std::domain_error("students_t_cdf: dof must be positive");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double xt = dof / (dof + x * x);
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, xt);
  return x > 0.0 ? 1.0 - tail : tail;
}

double students_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("students_t_quantile: p must lie in (0,1)");
  if (!(dof > 0.0))
    throw std::domain_error("students_t_quantile: dof must be positive");
  if (dof > 1e7) return normal_quantile(p);
  if (p == 0.5) return 0.0;
  // Bracket the root, then safeguarded Newton on the CDF.
  double lo = -1.0, hi = 1.0;
  while (students_t_cdf(lo, dof) > p) lo *= 2.0;
  while (students_t_cdf(hi, dof) < p) hi *= 2.0;
  double x = normal_quantile(p);
  if (x < lo || x > hi) x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double err = students_t_cdf(x, dof) - p;
    if (err > 0.0)
      hi = x;
    else
      lo = x;
    const double pdf = students_t_pdf(x, dof);
    double step = pdf > 0.0 ? err / pdf : 0.0;
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-13 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  return x;
}

std::pair<double, double> sample_stats(Eigen::Ref<const Eigen::VectorXd> values) {
  const auto n = values.size();
  if (n < 2)
    throw InsufficientDataError("sample_stats: need at least 2 values");
  const double mean = values.mean();
  const double ss = (values.array() - mean).square().sum();
  return {mean, ss / static_cast<double>(n - 1)};
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty())
    throw InsufficientDataError("sorted_quantile: empty input");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxSummary box_summary(const std::vector<double>& values) {
  if (values.empty())
    throw InsufficientDataError("box_summary: empty input");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  BoxSummary s;
  s.median = sorted_quantile(sorted, 0.5);
  s.q1 = sorted_quantile(sorted, 0.25);
  s.q3 = sorted_quantile(sorted, 0.75);
  const double iqr = s.q3 - s.q1;
  const double fence_low = s.q1 - 1.5 * iqr;
  const double fence_high = s.q3 + 1.5 * iqr;
  // Whiskers sit on the most extreme points inside the fences. On tiny
  // samples the interpolated quartile can fall outside every in-fence point;
  // the whisker is then clamped to the box edge so the ordering
  // whisker_low <= q1 <= q3 <= whisker_high always holds.
  double wl = s.q1, wh = s.q3;
  for (double v : sorted) {
    if (v >= fence_low) {
      wl = v;
      break;
    }
  }
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
    if (*it <= fence_high) {
      wh = *it;
      break;
    }
  }
  for (double v : sorted)
    if (v < wl || v > wh) ++s.n_outliers;
  s.whisker_low = std::min(wl, s.q1);
  s.whisker_high = std::max(wh, s.q3);
  return s;
}

BoxSummary box_summary(Eigen::Ref<const Eigen::VectorXd> values) {
  return box_summary(
      std::vector<double>(values.data(), values.data() + values.size()));
}

TestDecision welch_t_test(Eigen::Ref<const Eigen::VectorXd> a,
                          Eigen::Ref<const Eigen::VectorXd> b, double alpha) {
  if (a.size() < 2 || b.size() < 2)
    throw InsufficientDataError("welch_t_test: each arm needs >= 2 values");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("welch_t_test: alpha must lie in (0,1)");
  const auto [ma, va] = sample_stats(a);
  const auto [mb, vb] = sample_stats(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;

  TestDecision d;
  if (se2 <= 0.0) {
    // Degenerate variances: equal means -> statistic 0, otherwise the
    // difference is exact.
    d.statistic = (ma == mb) ? 0.0
                             : std::copysign(
                                   std::numeric_limits<double>::infinity(), ma - mb);
    d.critical_value = normal_quantile(1.0 - 0.5 * alpha);
    d.reject = std::abs(d.statistic) > d.critical_value;
    return d;
  }
  d.statistic = (ma - mb) / std::sqrt(se2);
  const double dof = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) +
                                  (vb / nb) * (vb / nb) / (nb - 1.0));
  d.critical_value = students_t_quantile(1.0 - 0.5 * alpha, std::floor(dof));
  d.reject = std::abs(d.statistic) > d.critical_value;
  return d;
}

LinearFit linear_fit(Eigen::Ref<const Eigen::VectorXd> x,
                     Eigen::Ref<const Eigen::VectorXd> y) {
  const auto n = x.size();
  if (n != y.size() || n < 2)
    throw InsufficientDataError("linear_fit: need matching vectors of length >= 2");
  const double mx = x.mean();
  const double my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  if (sxx <= 0.0) throw InsufficientDataError("linear_fit: x has no spread");
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_tot = (y.array() - my).square().sum();
  const double ss_res =
      (y.array() - fit.intercept - fit.slope * x.array()).square().sum();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (n > 2) {
    const double se =
        std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
    fit.slope_t = se > 0.0
                      ? fit.slope / se
                      : std::copysign(std::numeric_limits<double>::infinity(),
                                      fit.slope);
  }
  return fit;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n_rows, std::size_t n,
                                           RngStream& rng) {
  if (n_rows == 0)
    throw InsufficientDataError("bootstrap_indices: empty source");
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.uniform_index(n_rows);
  return idx;
}

}  // namespace tadsie::stats

namespace tadsie {

double RngStream::normal() { return stats::normal_quantile(uniform01()); }

}  // namespace tadsie

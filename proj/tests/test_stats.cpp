#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tadsie/errors.hpp"
#include "tadsie/rng.hpp"
#include "tadsie/stats.hpp"

using namespace tadsie;
using stats::BoxSummary;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// Brute-force quartile oracle: sort and interpolate at p*(n-1).
double quantile_oracle(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST_CASE("normal_quantile matches high-precision reference values") {
  CHECK(stats::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(stats::normal_quantile(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(stats::normal_quantile(0.8) ==
        doctest::Approx(0.841621233572914).epsilon(1e-9));
  CHECK(stats::normal_quantile(0.95) ==
        doctest::Approx(1.644853626951).epsilon(1e-9));
  CHECK_THROWS_AS(stats::normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(stats::normal_quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(stats::normal_quantile(-0.2), std::domain_error);
}

TEST_CASE("normal_cdf values and symmetry") {
  CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(stats::normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(stats::normal_cdf(-2.7718) ==
        doctest::Approx(0.002787363831).epsilon(1e-8));
  for (double x : {-3.5, -1.0, -0.2, 0.7, 2.9}) {
    CHECK(stats::normal_cdf(-x) ==
          doctest::Approx(1.0 - stats::normal_cdf(x)).epsilon(1e-12));
  }
}

TEST_CASE("normal quantile and cdf are mutual inverses") {
  for (int i = 1; i <= 99; ++i) {
    const double p = static_cast<double>(i) / 100.0;
    CHECK(stats::normal_cdf(stats::normal_quantile(p)) ==
          doctest::Approx(p).epsilon(1e-8));
  }
}

TEST_CASE("students_t against reference quantiles") {
  CHECK(stats::students_t_quantile(0.975, 1) ==
        doctest::Approx(12.7062047364).epsilon(1e-8));
  CHECK(stats::students_t_quantile(0.975, 10) ==
        doctest::Approx(2.2281388520).epsilon(1e-8));
  CHECK(stats::students_t_quantile(0.975, 98) ==
        doctest::Approx(1.9844674544).epsilon(1e-8));
  CHECK(stats::students_t_quantile(0.95, 5) ==
        doctest::Approx(2.0150483733).epsilon(1e-8));
  CHECK(stats::students_t_quantile(0.5, 7) == doctest::Approx(0.0));
  // round trip
  for (double p : {0.05, 0.25, 0.6, 0.99}) {
    CHECK(stats::students_t_cdf(stats::students_t_quantile(p, 13), 13) ==
          doctest::Approx(p).epsilon(1e-10));
  }
}

TEST_CASE("sample_stats basics") {
  SUBCASE("constant sequence") {
    const auto [m, v] = stats::sample_stats(vec({1, 1, 1}));
    CHECK(m == doctest::Approx(1.0));
    CHECK(v == doctest::Approx(0.0));
  }
  SUBCASE("hand-computed values") {
    const auto [m, v] = stats::sample_stats(vec({0, 2}));
    CHECK(m == doctest::Approx(1.0));
    CHECK(v == doctest::Approx(2.0));
    const auto [m2, v2] = stats::sample_stats(vec({1, 2, 3, 4}));
    CHECK(m2 == doctest::Approx(2.5));
    CHECK(v2 == doctest::Approx(5.0 / 3.0));
  }
  SUBCASE("too short") {
    CHECK_THROWS_AS(stats::sample_stats(vec({1})), InsufficientDataError);
  }
}

TEST_CASE("box_summary worked examples") {
  SUBCASE("single point") {
    const BoxSummary s = stats::box_summary(vec({5}));
    CHECK(s.median == 5);
    CHECK(s.q1 == 5);
    CHECK(s.q3 == 5);
    CHECK(s.whisker_low == 5);
    CHECK(s.whisker_high == 5);
    CHECK(s.n_outliers == 0);
  }
  SUBCASE("1..9") {
    const BoxSummary s = stats::box_summary(vec({1, 2, 3, 4, 5, 6, 7, 8, 9}));
    CHECK(s.median == doctest::Approx(5.0));
    CHECK(s.q1 == doctest::Approx(3.0));
    CHECK(s.q3 == doctest::Approx(7.0));
    CHECK(s.n_outliers == 0);
  }
  SUBCASE("1..9 plus an extreme point") {
    const BoxSummary s =
        stats::box_summary(vec({1, 2, 3, 4, 5, 6, 7, 8, 9, 100}));
    // q1 = 3.25, q3 = 7.75, fence_high = 7.75 + 1.5*4.5 = 14.5
    CHECK(s.q1 == doctest::Approx(3.25));
    CHECK(s.q3 == doctest::Approx(7.75));
    CHECK(s.whisker_high == doctest::Approx(9.0));
    CHECK(s.n_outliers == 1);
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(stats::box_summary(std::vector<double>{}),
                    InsufficientDataError);
  }
}

TEST_CASE("box_summary matches the brute-force oracle on random inputs") {
  RngStream rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + rng.uniform_index(40);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal(0.0, 3.0);
    const BoxSummary s = stats::box_summary(v);
    CHECK(s.median == doctest::Approx(quantile_oracle(v, 0.5)).epsilon(1e-12));
    CHECK(s.q1 == doctest::Approx(quantile_oracle(v, 0.25)).epsilon(1e-12));
    CHECK(s.q3 == doctest::Approx(quantile_oracle(v, 0.75)).epsilon(1e-12));
    // whiskers are data points inside the fences, or the box edge when no
    // in-fence point reaches it
    const double iqr = s.q3 - s.q1;
    CHECK(s.whisker_low >= s.q1 - 1.5 * iqr - 1e-12);
    CHECK(s.whisker_high <= s.q3 + 1.5 * iqr + 1e-12);
    CHECK((std::count(v.begin(), v.end(), s.whisker_low) > 0 ||
           s.whisker_low == s.q1));
    CHECK((std::count(v.begin(), v.end(), s.whisker_high) > 0 ||
           s.whisker_high == s.q3));
    CHECK(s.whisker_low <= s.q1);
    CHECK(s.q1 <= s.median);
    CHECK(s.median <= s.q3);
    CHECK(s.q3 <= s.whisker_high);
    const auto outliers = static_cast<std::size_t>(std::count_if(
        v.begin(), v.end(),
        [&](double x) { return x < s.whisker_low || x > s.whisker_high; }));
    CHECK(s.n_outliers == outliers);
  }
}

TEST_CASE("welch_t_test behavior") {
  RngStream rng(7);
  SUBCASE("identical samples never reject") {
    const auto a = vec({1.0, 2.0, 3.0, 4.0});
    const auto d = stats::welch_t_test(a, a, 0.05);
    CHECK_FALSE(d.reject);
    CHECK(d.statistic == doctest::Approx(0.0));
  }
  SUBCASE("degenerate variance with equal means") {
    const auto a = vec({2.0, 2.0, 2.0});
    const auto d = stats::welch_t_test(a, a, 0.05);
    CHECK_FALSE(d.reject);
    CHECK(d.statistic == 0.0);
  }
  SUBCASE("degenerate variance with different means rejects") {
    const auto d =
        stats::welch_t_test(vec({2.0, 2.0, 2.0}), vec({3.0, 3.0, 3.0}), 0.05);
    CHECK(d.reject);
  }
  SUBCASE("unit effect at n=50 rejects essentially always") {
    int rejects = 0;
    const int runs = 200;
    for (int i = 0; i < runs; ++i) {
      Eigen::VectorXd a(50), b(50);
      for (Eigen::Index k = 0; k < 50; ++k) {
        a[k] = rng.normal();
        b[k] = rng.normal(1.0, 1.0);
      }
      rejects += stats::welch_t_test(a, b, 0.05).reject ? 1 : 0;
    }
    // closed-form power at this size is about 0.999
    CHECK(rejects >= runs - 3);
  }
}

TEST_CASE("welch_t_test null calibration across alpha levels") {
  RngStream rng(11);
  for (double alpha : {0.01, 0.05, 0.10}) {
    int rejects = 0;
    const int runs = 4000;
    for (int i = 0; i < runs; ++i) {
      Eigen::VectorXd a(20), b(25);
      for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = rng.normal();
      for (Eigen::Index k = 0; k < b.size(); ++k) b[k] = rng.normal();
      rejects += stats::welch_t_test(a, b, alpha).reject ? 1 : 0;
    }
    const double rate = static_cast<double>(rejects) / runs;
    CHECK(std::abs(rate - alpha) < 0.02);
  }
}

TEST_CASE("bootstrap_resample contracts") {
  SUBCASE("single row repeats") {
    RngStream rng(1);
    const std::vector<int> rows{7};
    const auto out = stats::bootstrap_resample(rows, 3, rng);
    CHECK(out == std::vector<int>{7, 7, 7});
  }
  SUBCASE("fixed seed is bit-reproducible") {
    const std::vector<int> rows{1, 2, 3, 4, 5};
    RngStream a(99), b(99);
    CHECK(stats::bootstrap_resample(rows, 64, a) ==
          stats::bootstrap_resample(rows, 64, b));
  }
  SUBCASE("two-row frequencies follow the binomial bound") {
    RngStream rng(5);
    const std::vector<int> rows{0, 1};
    const std::size_t n = 10000;
    const auto out = stats::bootstrap_resample(rows, n, rng);
    const auto ones = static_cast<double>(std::count(out.begin(), out.end(), 1));
    CHECK(std::abs(ones - 5000.0) <= 3.0 * std::sqrt(n / 4.0));
  }
  SUBCASE("empty source errors") {
    RngStream rng(1);
    CHECK_THROWS_AS(stats::bootstrap_indices(0, 3, rng), InsufficientDataError);
  }
}

TEST_CASE("rng stream basics") {
  SUBCASE("derive is deterministic and order-sensitive") {
    RngStream a(123), b(123);
    auto a0 = a.derive(0);
    auto b0 = b.derive(0);
    CHECK(a0.next_u64() == b0.next_u64());
    // a second derive with the same key gives a different child
    auto a1 = a.derive(0);
    CHECK(a1.next_u64() != a0.next_u64());
  }
  SUBCASE("normal draws have roughly standard moments") {
    RngStream rng(3);
    Eigen::VectorXd draws(20000);
    for (Eigen::Index i = 0; i < draws.size(); ++i) draws[i] = rng.normal();
    const auto [m, v] = stats::sample_stats(draws);
    CHECK(std::abs(m) < 0.03);
    CHECK(std::abs(v - 1.0) < 0.05);
  }
}

TEST_CASE("linear_fit recovers a known line") {
  const auto x = vec({1, 2, 3, 4});
  const auto y = vec({3, 5, 7, 9});  // 1 + 2x
  const auto fit = stats::linear_fit(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
}

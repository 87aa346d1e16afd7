#include <doctest.h>

#include <cmath>

#include "tadsie/cohort.hpp"
#include "tadsie/errors.hpp"
#include "tadsie/tad.hpp"

using namespace tadsie;
using cohort::CohortGenConfig;
using tad::TadConfig;

namespace {

CohortGenConfig trial_cohort(double effect, double noise) {
  CohortGenConfig c;
  c.visits = 6;
  c.baseline_index = 2;
  c.endpoint_index = 5;
  c.baseline_mean = 30.0;
  c.baseline_sd = 3.0;
  c.control_drift = -0.4;
  c.treatment_effect_mean = effect;
  c.treatment_effect_sd = 0.5;
  c.noise_sd = noise;
  c.latent_factor_count = 2;
  c.latent_loading_sd = 0.7;
  return c;
}

TadConfig quick_config() {
  TadConfig c;
  c.n_pilot = 12;
  c.n_max = 120;
  c.b_replicates = 20;
  c.t_samples = 25;
  return c;
}

moments::Moments pooled_moments(double ate, double variance) {
  moments::Moments m;
  m.ate = ate;
  m.variance = variance;
  m.variance_of_ate = 0.0;
  m.method = moments::MomentMethod::secrets;
  return m;
}

}  // namespace

TEST_CASE("one_sample_arm_size") {
  CHECK(tad::one_sample_arm_size(5.0, 100.0, 0.05, 0.8) ==
        doctest::Approx(15.697759).epsilon(1e-6));
  CHECK(tad::one_sample_arm_size(1.0, 0.0, 0.05, 0.8) == 0.0);
  CHECK(std::isinf(tad::one_sample_arm_size(0.0, 4.0, 0.05, 0.8)));
  SUBCASE("quadrupling the effect divides the size by 16") {
    const double base = tad::one_sample_arm_size(1.0, 50.0, 0.05, 0.9);
    CHECK(tad::one_sample_arm_size(4.0, 50.0, 0.05, 0.9) ==
          doctest::Approx(base / 16.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(tad::one_sample_arm_size(1.0, 1.0, 0.0, 0.8),
                  std::domain_error);
}

TEST_CASE("get_step_size follows the hand-traced example") {
  const auto plan = tad::get_step_size(2.0, 400.0, 30, 0.05, 0.8, 1500, 0.5);
  CHECK(plan.n_step == 182);
  CHECK(plan.t == doctest::Approx(0.540204).epsilon(2e-3 / 0.54));
}

TEST_CASE("get_step_size clamps and conventions") {
  SUBCASE("already at target: zero step, t = 1") {
    const auto plan = tad::step_from_target(25.0, 30, 1500, 0.5);
    CHECK(plan.n_step == 0);
    CHECK(plan.t == 1.0);
  }
  SUBCASE("scale 1 takes the full step and lands at t = 1") {
    const auto plan = tad::step_from_target(100.0, 30, 1500, 1.0);
    CHECK(plan.n_step == 70);
    CHECK(plan.t == 1.0);
  }
  SUBCASE("unbounded target jumps to the cap") {
    const auto plan = tad::step_from_target(
        std::numeric_limits<double>::infinity(), 30, 100, 0.1);
    CHECK(plan.n_step == 70);
    CHECK(plan.t == 1.0);
  }
  SUBCASE("at the cap nothing moves") {
    const auto plan = tad::step_from_target(5000.0, 100, 100, 0.5);
    CHECK(plan.n_step == 0);
    CHECK(plan.t == 1.0);
  }
  SUBCASE("t never exceeds 1 despite ceil rounding") {
    const auto plan = tad::step_from_target(31.2, 30, 1500, 1.0);
    CHECK(plan.n_step == 2);  // ceil(1.2)
    CHECK(plan.t == 1.0);
  }
}

TEST_CASE("conditional power formulas") {
  SUBCASE("two-sided value at z=0, t=0.5, alpha=0.05") {
    CHECK(tad::conditional_power_two_sided(0.0, 0.5, 0.05) ==
          doctest::Approx(0.0055746).epsilon(1e-4 / 0.0055746));
  }
  SUBCASE("two-sided form is symmetric in z") {
    for (double z : {0.3, 1.1, 2.7})
      CHECK(tad::conditional_power_two_sided(z, 0.4, 0.05) ==
            doctest::Approx(tad::conditional_power_two_sided(-z, 0.4, 0.05))
                .epsilon(1e-12));
  }
  SUBCASE("trend CP is exactly one half on the boundary path") {
    for (double alpha : {0.01, 0.05, 0.2}) {
      for (double t : {0.1, 0.5, 0.9}) {
        const double z = stats::normal_quantile(1.0 - alpha) * std::sqrt(t);
        CHECK(tad::conditional_power_trend(z, t, alpha) ==
              doctest::Approx(0.5).epsilon(1e-12));
      }
    }
  }
  SUBCASE("trend form equals the drift form at the interim estimate") {
    RngStream rng(3);
    for (int i = 0; i < 1000; ++i) {
      const double z = rng.normal(0.0, 2.0);
      const double t = 0.02 + 0.96 * rng.uniform01();
      const double drift = z / std::sqrt(t);
      CHECK(tad::conditional_power_trend(z, t, 0.05) ==
            doctest::Approx(tad::conditional_power_one_sided(z, t, 0.05, drift))
                .epsilon(1e-10));
    }
  }
  SUBCASE("undefined outside 0 < t < 1") {
    CHECK_THROWS_AS(tad::conditional_power_two_sided(1.0, 1.0, 0.05),
                    std::domain_error);
    CHECK_THROWS_AS(tad::conditional_power_trend(1.0, 0.0, 0.05),
                    std::domain_error);
  }
}

TEST_CASE("check_for_futility") {
  SUBCASE("boundary zero disables stopping entirely") {
    CHECK_FALSE(tad::check_for_futility(pooled_moments(0.0, 1.0), 50, 0.5,
                                        0.05, 0.0));
    CHECK_FALSE(tad::check_for_futility(pooled_moments(0.0, 0.0), 50, 0.5,
                                        0.05, 0.0));
  }
  SUBCASE("zero effect at t=0.5 is futile at a 1% boundary") {
    // cp = 0.0055746 <= 0.01
    CHECK(tad::check_for_futility(pooled_moments(0.0, 1.0), 50, 0.5, 0.05,
                                  0.01));
  }
  SUBCASE("huge interim statistic is never futile") {
    CHECK_FALSE(tad::check_for_futility(pooled_moments(10.0, 0.01), 400, 0.5,
                                        0.05, 0.2));
  }
  SUBCASE("degenerate variance resolves by the effect sign") {
    CHECK_FALSE(tad::check_for_futility(pooled_moments(1.0, 0.0), 50, 0.5,
                                        0.05, 0.2));
    CHECK(tad::check_for_futility(pooled_moments(0.0, 0.0), 50, 0.5, 0.05,
                                  0.001));
  }
  SUBCASE("raising the boundary never rescues a futile trial") {
    const auto m = pooled_moments(0.2, 4.0);
    bool was_futile = false;
    for (double boundary : {0.01, 0.05, 0.11, 0.2, 0.5}) {
      const bool futile = tad::check_for_futility(m, 40, 0.6, 0.05, boundary);
      if (was_futile) CHECK(futile);
      was_futile = futile;
    }
  }
}

TEST_CASE("interim statistic pools by moment method") {
  auto m = pooled_moments(2.0, 16.0);
  // ITE-pooled: z = 2 / sqrt(16 / (2*32)) = 4
  CHECK(tad::interim_statistic(m, 32) == doctest::Approx(4.0));
  m.method = moments::MomentMethod::two_sample;
  // two-sample: z = 2 / sqrt(16 / 32)
  CHECK(tad::interim_statistic(m, 32) ==
        doctest::Approx(2.0 / std::sqrt(0.5)));
}

TEST_CASE("conduct_pilot_study recruits and estimates deterministically") {
  const auto config = quick_config();
  RngStream curve_rng(5);
  cohort::GeneratorSource source(trial_cohort(1.0, 1.0), curve_rng);
  RngStream r1(6);
  const auto pilot = tad::conduct_pilot_study(config, source, r1);
  CHECK(pilot.dataset.control.size() == 12);
  CHECK(pilot.dataset.treatment.size() == 12);
  pilot.dataset.validate();

  RngStream curve_rng2(5);
  cohort::GeneratorSource source2(trial_cohort(1.0, 1.0), curve_rng2);
  RngStream r2(6);
  const auto pilot2 = tad::conduct_pilot_study(config, source2, r2);
  CHECK(pilot.moments.ate == pilot2.moments.ate);
  CHECK(pilot.moments.variance == pilot2.moments.variance);
}

TEST_CASE("run_sample_size_search") {
  SUBCASE("a pilot already at target takes zero iterations") {
    auto config = quick_config();
    RngStream curve_rng(7);
    cohort::GeneratorSource source(trial_cohort(8.0, 0.2), curve_rng);
    RngStream rng(8);
    auto pilot = tad::conduct_pilot_study(config, source, rng);
    // a huge effect with tiny variance puts n_target below the pilot size
    pilot.moments = pooled_moments(50.0, 1.0);
    const auto out = tad::run_sample_size_search(pilot, config, source, rng);
    CHECK(out.trace.empty());
    CHECK_FALSE(out.futility_stopped);
    CHECK(pilot.dataset.control.size() == 12);
  }
  SUBCASE("accumulation is append-only and capped at n_max") {
    auto config = quick_config();
    config.futility_power_boundary = 0.0;  // let it run to the cap
    RngStream curve_rng(9);
    cohort::GeneratorSource source(trial_cohort(0.05, 2.0), curve_rng);
    RngStream rng(10);
    auto pilot = tad::conduct_pilot_study(config, source, rng);
    const auto first_control = pilot.dataset.control;
    const auto out = tad::run_sample_size_search(pilot, config, source, rng);
    CHECK(pilot.dataset.control.size() <= 120);
    for (std::size_t i = 0; i < first_control.size(); ++i)
      CHECK(pilot.dataset.control[i].trajectory ==
            first_control[i].trajectory);
    Eigen::Index last = 0;
    for (const auto& entry : out.trace) {
      CHECK(entry.n_curr > last);
      CHECK(entry.n_curr <= 120);
      CHECK(entry.t > 0.0);
      CHECK(entry.t <= 1.0);
      last = entry.n_curr;
    }
  }
}

TEST_CASE("run_tad_sie end to end") {
  SUBCASE("futile null trial accepts without a final test") {
    auto config = quick_config();
    config.futility_power_boundary = 0.5;  // aggressive stopping
    RngStream curve_rng(11);
    cohort::GeneratorSource source(trial_cohort(0.0, 2.0), curve_rng);
    RngStream rng(12);
    const auto result = tad::run_tad_sie(config, source, rng);
    if (result.futility_stopped) {
      CHECK(result.decision == tad::Decision::accept);
      CHECK_FALSE(result.test.has_value());
    }
    CHECK(result.iterations == static_cast<int>(result.trace.size()));
    CHECK(result.final_arm_size <= config.n_max);
  }
  SUBCASE("strong effect with futility disabled rejects") {
    auto config = quick_config();
    config.futility_power_boundary = 0.0;
    RngStream curve_rng(13);
    cohort::GeneratorSource source(trial_cohort(4.0, 0.5), curve_rng);
    RngStream rng(14);
    const auto result = tad::run_tad_sie(config, source, rng);
    CHECK(result.decision == tad::Decision::reject);
    REQUIRE(result.test.has_value());
    CHECK(result.test->reject);
  }
  SUBCASE("fixed seeds reproduce the whole trial") {
    auto config = quick_config();
    RngStream c1(15), c2(15);
    cohort::GeneratorSource s1(trial_cohort(1.0, 1.0), c1);
    cohort::GeneratorSource s2(trial_cohort(1.0, 1.0), c2);
    RngStream r1(16), r2(16);
    const auto a = tad::run_tad_sie(config, s1, r1);
    const auto b = tad::run_tad_sie(config, s2, r2);
    CHECK(a.decision == b.decision);
    CHECK(a.final_arm_size == b.final_arm_size);
    CHECK(a.iterations == b.iterations);
    for (int i = 0; i < a.iterations; ++i) {
      CHECK(a.trace[i].n_step == b.trace[i].n_step);
      CHECK(a.trace[i].ate == b.trace[i].ate);
      CHECK(a.trace[i].variance == b.trace[i].variance);
    }
  }
  SUBCASE("two-sample moments are rejected by the SIE entry point") {
    auto config = quick_config();
    config.moment_method = moments::MomentMethod::two_sample;
    RngStream curve_rng(17);
    cohort::GeneratorSource source(trial_cohort(1.0, 1.0), curve_rng);
    RngStream rng(18);
    CHECK_THROWS_AS(tad::run_tad_sie(config, source, rng), ConfigurationError);
  }
}

TEST_CASE("tad config validation") {
  TadConfig c;
  c.n_pilot = 1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = TadConfig{};
  c.step_size_scale_factor = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = TadConfig{};
  c.n_pilot = 2000;  // above n_max
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = TadConfig{};
  c.cp_moment_method = moments::MomentMethod::two_sample;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tadsie/cohort.hpp"
#include "tadsie/errors.hpp"
#include "tadsie/stats.hpp"

using namespace tadsie;
using cohort::Arm;
using cohort::CohortGenConfig;
using cohort::RctDataset;

namespace {

CohortGenConfig quiet_config() {
  CohortGenConfig c;
  c.visits = 5;
  c.baseline_index = 0;
  c.endpoint_index = 4;
  c.baseline_mean = 10.0;
  c.baseline_sd = 0.0;
  c.control_drift = 0.0;
  c.treatment_effect_mean = 0.0;
  c.treatment_effect_sd = 0.0;
  c.noise_sd = 0.0;
  c.latent_factor_count = 1;
  c.latent_loading_sd = 0.0;
  return c;
}

double change_score(const cohort::PatientRecord& r, const RctDataset& ds) {
  return cohort::outcome_change_score(r.trajectory, ds.baseline_index,
                                      ds.endpoint_index);
}

}  // namespace

TEST_CASE("generate_cohort deterministic limits") {
  SUBCASE("all-zero config yields zero outcomes") {
    RngStream rng(1);
    const auto ds = cohort::generate_cohort(quiet_config(), 4, 4, rng);
    for (const auto& r : ds.control) CHECK(change_score(r, ds) == 0.0);
    for (const auto& r : ds.treatment) CHECK(change_score(r, ds) == 0.0);
  }
  SUBCASE("constant effect 5 separates the arms exactly") {
    auto c = quiet_config();
    c.treatment_effect_mean = 5.0;
    RngStream rng(2);
    const auto ds = cohort::generate_cohort(c, 4, 4, rng);
    for (const auto& r : ds.control)
      CHECK(change_score(r, ds) == doctest::Approx(0.0));
    for (const auto& r : ds.treatment)
      CHECK(change_score(r, ds) == doctest::Approx(5.0));
  }
  SUBCASE("drift accrues per visit") {
    auto c = quiet_config();
    c.control_drift = 1.0;
    RngStream rng(3);
    const auto ds = cohort::generate_cohort(c, 2, 2, rng);
    CHECK(change_score(ds.control[0], ds) == doctest::Approx(4.0));
  }
  SUBCASE("effect ramps from zero at baseline") {
    auto c = quiet_config();
    c.visits = 6;
    c.baseline_index = 2;
    c.endpoint_index = 5;
    c.treatment_effect_mean = 6.0;
    RngStream rng(4);
    const auto ds = cohort::generate_cohort(c, 1, 1, rng);
    const auto& t = ds.treatment[0].trajectory;
    CHECK(t[2] == doctest::Approx(10.0));  // baseline untouched
    CHECK(t[3] == doctest::Approx(12.0));  // one third of the ramp
    CHECK(t[5] == doctest::Approx(16.0));  // full effect at endpoint
  }
}

TEST_CASE("generator law: sample ATE converges to the configured effect") {
  CohortGenConfig c;
  c.visits = 6;
  c.baseline_index = 2;
  c.endpoint_index = 5;
  c.treatment_effect_mean = -3.17;  // negative effects are fine
  c.treatment_effect_sd = 1.0;
  c.noise_sd = 1.0;
  c.latent_factor_count = 2;
  c.latent_loading_sd = 0.5;
  RngStream rng(11);
  const auto ds = cohort::generate_cohort(c, 10000, 10000, rng);
  const auto outcome =
      cohort::change_score_outcome(ds.baseline_index, ds.endpoint_index);
  const auto treat = cohort::outcomes_of(ds.treatment, outcome);
  const auto ctrl = cohort::outcomes_of(ds.control, outcome);
  const double ate = treat.mean() - ctrl.mean();
  const double se = std::sqrt(stats::sample_stats(treat).second / 10000.0 +
                              stats::sample_stats(ctrl).second / 10000.0);
  CHECK(std::abs(ate - (-3.17)) <= 3.0 * se);
}

TEST_CASE("generate_cohort validates its config") {
  auto c = quiet_config();
  c.noise_sd = -1.0;
  RngStream rng(1);
  CHECK_THROWS_AS(cohort::generate_cohort(c, 2, 2, rng), ValidationError);
  c = quiet_config();
  c.endpoint_index = c.visits;  // out of range
  CHECK_THROWS_AS(cohort::generate_cohort(c, 2, 2, rng), ValidationError);
}

TEST_CASE("outcome_change_score") {
  Eigen::VectorXd t(5);
  t << 10, 8, 7, 5, 4;
  CHECK(cohort::outcome_change_score(t, 0, 4) == doctest::Approx(-6.0));
  CHECK(cohort::outcome_change_score(Eigen::VectorXd::Constant(4, 3.3), 0, 3) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(cohort::outcome_change_score(t, 0, 5), std::domain_error);
  CHECK_THROWS_AS(cohort::outcome_change_score(t, -1, 4), std::domain_error);
}

TEST_CASE("dataset csv round trip is the identity") {
  CohortGenConfig c;
  c.visits = 4;
  c.baseline_index = 1;
  c.endpoint_index = 3;
  c.noise_sd = 2.0;
  RngStream rng(5);
  const auto ds = cohort::generate_cohort(c, 3, 2, rng);

  const auto dir = std::filesystem::temp_directory_path() / "tadsie_test_io";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "cohort.csv").string();
  cohort::save_dataset(ds, path);
  const auto loaded = cohort::load_dataset(path);

  REQUIRE(loaded.control.size() == ds.control.size());
  REQUIRE(loaded.treatment.size() == ds.treatment.size());
  CHECK(loaded.visits == ds.visits);
  CHECK(loaded.baseline_index == ds.baseline_index);
  CHECK(loaded.endpoint_index == ds.endpoint_index);
  for (std::size_t i = 0; i < ds.control.size(); ++i) {
    CHECK(loaded.control[i].subject_id == ds.control[i].subject_id);
    CHECK(loaded.control[i].trajectory == ds.control[i].trajectory);
  }
  for (std::size_t i = 0; i < ds.treatment.size(); ++i)
    CHECK(loaded.treatment[i].trajectory == ds.treatment[i].trajectory);
}

TEST_CASE("csv parser rejects malformed input with line numbers") {
  SUBCASE("unknown arm label") {
    std::istringstream in(
        "subject_id,arm,v0,v1\n"
        "s1,control,1,2\n"
        "s2,placebo,1,2\n");
    CHECK_THROWS_WITH_AS(cohort::parse_dataset_csv(in, 0, 1),
                         doctest::Contains("line 3"), ParseError);
  }
  SUBCASE("ragged row") {
    std::istringstream in(
        "subject_id,arm,v0,v1\n"
        "s1,control,1\n");
    CHECK_THROWS_WITH_AS(cohort::parse_dataset_csv(in, 0, 1),
                         doctest::Contains("line 2"), ParseError);
  }
  SUBCASE("non-numeric cell") {
    std::istringstream in(
        "subject_id,arm,v0,v1\n"
        "s1,treatment,1,abc\n");
    CHECK_THROWS_WITH_AS(cohort::parse_dataset_csv(in, 0, 1),
                         doctest::Contains("non-numeric"), ParseError);
  }
  SUBCASE("bad header") {
    std::istringstream in("id,arm,v0,v1\ns1,control,1,2\n");
    CHECK_THROWS_AS(cohort::parse_dataset_csv(in, 0, 1), ParseError);
  }
}

TEST_CASE("a 204-subject file with a 106/98 split loads cleanly") {
  std::ostringstream src;
  src << "subject_id,arm,v0,v1,v2\n";
  for (int i = 0; i < 106; ++i)
    src << "c" << i << ",control," << i << "," << i + 1 << "," << i + 2 << "\n";
  for (int i = 0; i < 98; ++i)
    src << "t" << i << ",treatment," << i << "," << i << "," << i << "\n";
  std::istringstream in(src.str());
  const auto ds = cohort::parse_dataset_csv(in, 0, 2);
  CHECK(ds.control.size() == 106);
  CHECK(ds.treatment.size() == 98);
}

TEST_CASE("generator source recruits fresh subjects deterministically") {
  auto c = quiet_config();
  c.noise_sd = 1.0;
  RngStream curve_rng(9);
  cohort::GeneratorSource source(c, curve_rng);
  RngStream r1(21);
  auto [ctrl, treat] = source.recruit(1, r1);
  CHECK(ctrl.size() == 1);
  CHECK(treat.size() == 1);
  CHECK(ctrl[0].arm == Arm::control);
  CHECK(treat[0].arm == Arm::treatment);

  RngStream curve_rng2(9);
  cohort::GeneratorSource source2(c, curve_rng2);
  RngStream r2(21);
  auto [ctrl2, treat2] = source2.recruit(1, r2);
  CHECK(ctrl[0].trajectory == ctrl2[0].trajectory);
  CHECK(treat[0].trajectory == treat2[0].trajectory);
}

TEST_CASE("pool source resampling") {
  CohortGenConfig c;
  c.visits = 4;
  c.baseline_index = 0;
  c.endpoint_index = 3;
  c.noise_sd = 1.0;
  RngStream rng(33);
  const auto original = cohort::generate_cohort(c, 6, 5, rng);

  auto row_in = [](const Eigen::VectorXd& t,
                   const std::vector<cohort::PatientRecord>& pool) {
    for (const auto& r : pool)
      if (r.trajectory == t) return true;
    return false;
  };

  SUBCASE("h1 draws each arm from its own pool, never fabricating rows") {
    cohort::PoolSource source(original, cohort::Hypothesis::h1);
    RngStream r(1);
    auto [ctrl, treat] = source.recruit(20, r);
    for (const auto& x : ctrl) CHECK(row_in(x.trajectory, original.control));
    for (const auto& x : treat) CHECK(row_in(x.trajectory, original.treatment));
  }
  SUBCASE("h0 draws both arms from the control pool") {
    cohort::PoolSource source(original, cohort::Hypothesis::h0);
    RngStream r(2);
    auto [ctrl, treat] = source.recruit(20, r);
    for (const auto& x : treat) {
      CHECK(row_in(x.trajectory, original.control));
      CHECK(x.arm == Arm::treatment);  // relabeled on draw
    }
    (void)ctrl;
  }
  SUBCASE("fixed seed reproduces the draw") {
    cohort::PoolSource s1(original, cohort::Hypothesis::h1);
    cohort::PoolSource s2(original, cohort::Hypothesis::h1);
    RngStream r1(7), r2(7);
    auto [a1, b1] = s1.recruit(4, r1);
    auto [a2, b2] = s2.recruit(4, r2);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a1[i].trajectory == a2[i].trajectory);
      CHECK(b1[i].trajectory == b2[i].trajectory);
    }
  }
  SUBCASE("no-replacement pools exhaust") {
    cohort::PoolSource source(original, cohort::Hypothesis::h1, false);
    RngStream r(3);
    (void)source.recruit(5, r);  // drains the 5-subject treatment pool
    CHECK_THROWS_AS(source.recruit(1, r), RecruitmentError);
  }
}

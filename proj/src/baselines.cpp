#include "tadsie/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tadsie/errors.hpp"
#include "tadsie/stats.hpp"

namespace tadsie::baselines {

void BaselineConfig::validate() const {
  if (n_pilot < 2) throw ValidationError("baseline config: n_pilot must be >= 2");
  if (n_pilot > n_max)
    throw ValidationError("baseline config: n_pilot must not exceed n_max");
  if (!(alpha_target > 0.0 && alpha_target < 1.0))
    throw ValidationError("baseline config: alpha_target must lie in (0,1)");
  if (!(power_target > 0.0 && power_target < 1.0))
    throw ValidationError("baseline config: power_target must lie in (0,1)");
  if (!(interim_information_fraction > 0.0 && interim_information_fraction < 1.0))
    throw ValidationError(
        "baseline config: interim_information_fraction must lie in (0,1)");
  if (!(cp_promising_threshold >= 0.0 && cp_promising_threshold < 1.0))
    throw ValidationError(
        "baseline config: cp_promising_threshold must lie in [0,1)");
  testing.validate();
}

double two_sample_arm_size_real(const moments::TwoSampleMoments& m, double alpha,
                                double power) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(power > 0.0 && power < 1.0))
    throw std::domain_error(
        "two_sample_arm_size: alpha and power must lie in (0,1)");
  if (m.var_control < 0.0 || m.var_treatment < 0.0)
    throw std::domain_error("two_sample_arm_size: variances must be >= 0");
  const double var_sum = m.var_control + m.var_treatment;
  if (var_sum == 0.0) return 0.0;
  if (m.ate == 0.0) return std::numeric_limits<double>::infinity();
  const double k =
      stats::normal_quantile(1.0 - 0.5 * alpha) + stats::normal_quantile(power);
  return var_sum * k * k / (m.ate * m.ate);
}

Eigen::Index two_sample_arm_size(const moments::TwoSampleMoments& m, double alpha,
                                 double power, Eigen::Index n_max) {
  const double real = two_sample_arm_size_real(m, alpha, power);
  if (std::isinf(real)) return n_max;
  const auto ceiled = static_cast<Eigen::Index>(std::ceil(real));
  return std::clamp<Eigen::Index>(ceiled, 2, n_max);
}

namespace {

struct PlannedTrial {
  cohort::RctDataset dataset;
  std::vector<tad::IterationTrace> trace;
};

tad::TrialResult finish_with_welch(PlannedTrial& trial, double alpha,
                                   const cohort::OutcomeFn& outcome,
                                   const std::string& method) {
  tad::TrialResult result;
  result.method = method;
  result.futility_stopped = false;
  result.final_arm_size = static_cast<Eigen::Index>(trial.dataset.control.size());
  result.trace = std::move(trial.trace);
  result.iterations = static_cast<int>(result.trace.size());
  const auto test = stats::welch_t_test(
      cohort::outcomes_of(trial.dataset.control, outcome),
      cohort::outcomes_of(trial.dataset.treatment, outcome), alpha);
  result.test = test;
  result.decision = test.reject ? tad::Decision::reject : tad::Decision::accept;
  return result;
}

}  // namespace

tad::TrialResult run_fixed_sample_design(const BaselineConfig& config,
                                         cohort::SubjectSource& source,
                                         RngStream& rng) {
  config.validate();
  const auto outcome = cohort::change_score_outcome(source.baseline_index(),
                                                    source.endpoint_index());

  PlannedTrial trial;
  trial.dataset.visits = source.visits();
  trial.dataset.baseline_index = source.baseline_index();
  trial.dataset.endpoint_index = source.endpoint_index();
  auto [ctrl, treat] = source.recruit(config.n_pilot, rng);
  trial.dataset.control = std::move(ctrl);
  trial.dataset.treatment = std::move(treat);

  const auto pilot_moments = moments::estimate_two_sample_moments(
      trial.dataset.control, trial.dataset.treatment, outcome);
  const Eigen::Index planned =
      std::max(config.n_pilot,
               two_sample_arm_size(pilot_moments, config.alpha_target,
                                   config.power_target, config.n_max));
  if (planned > config.n_pilot) {
    auto [c2, t2] = source.recruit(planned - config.n_pilot, rng);
    trial.dataset.control.insert(trial.dataset.control.end(),
                                 std::make_move_iterator(c2.begin()),
                                 std::make_move_iterator(c2.end()));
    trial.dataset.treatment.insert(trial.dataset.treatment.end(),
                                   std::make_move_iterator(t2.begin()),
                                   std::make_move_iterator(t2.end()));
  }

  tad::IterationTrace entry;
  entry.iteration = 1;
  entry.n_step = planned - config.n_pilot;
  entry.n_curr = planned;
  entry.t = 1.0;
  entry.ate = pilot_moments.ate;
  entry.variance = pilot_moments.var_control + pilot_moments.var_treatment;
  entry.increase = false;
  trial.trace.push_back(entry);

  return finish_with_welch(trial, config.alpha_target, outcome, "fixed");
}

namespace {

// Shared promising-zone flow for Standard-TAD and its SECRETS-backed hybrid.
// The hooks supply moment estimation, the planned/re-estimated arm size, and
// the interim statistic under the respective moment convention.
struct PromisingZoneHooks {
  std::function<moments::Moments(const cohort::RctDataset&, RngStream&)> estimate;
  std::function<double(const moments::Moments&)> target_size;  // real-valued
  std::function<double(const moments::Moments&, Eigen::Index)> statistic;
};

tad::TrialResult run_promising_zone(const BaselineConfig& config,
                                    cohort::SubjectSource& source, RngStream& rng,
                                    const PromisingZoneHooks& hooks,
                                    tad::FinalTest final_test,
                                    const std::string& method) {
  config.validate();
  const auto outcome = cohort::change_score_outcome(source.baseline_index(),
                                                    source.endpoint_index());

  PlannedTrial trial;
  trial.dataset.visits = source.visits();
  trial.dataset.baseline_index = source.baseline_index();
  trial.dataset.endpoint_index = source.endpoint_index();
  auto [ctrl, treat] = source.recruit(config.n_pilot, rng);
  trial.dataset.control = std::move(ctrl);
  trial.dataset.treatment = std::move(treat);

  const moments::Moments pilot_moments = hooks.estimate(trial.dataset, rng);
  const double planned_real = hooks.target_size(pilot_moments);
  Eigen::Index planned = std::isinf(planned_real)
                             ? config.n_max
                             : static_cast<Eigen::Index>(std::ceil(planned_real));
  planned = std::clamp<Eigen::Index>(planned, 2, config.n_max);
  planned = std::max(planned, config.n_pilot);

  // Interim analysis at floor(t * planned) subjects per arm, at least the pilot.
  const auto interim_n = std::max(
      config.n_pilot,
      static_cast<Eigen::Index>(std::floor(config.interim_information_fraction *
                                           static_cast<double>(planned))));
  auto append = [&](Eigen::Index n_step) {
    if (n_step <= 0) return;
    auto [c2, t2] = source.recruit(n_step, rng);
    trial.dataset.control.insert(trial.dataset.control.end(),
                                 std::make_move_iterator(c2.begin()),
                                 std::make_move_iterator(c2.end()));
    trial.dataset.treatment.insert(trial.dataset.treatment.end(),
                                   std::make_move_iterator(t2.begin()),
                                   std::make_move_iterator(t2.end()));
  };
  append(interim_n - config.n_pilot);

  tad::IterationTrace plan_entry;
  plan_entry.iteration = 1;
  plan_entry.n_step = std::max<Eigen::Index>(interim_n - config.n_pilot, 0);
  plan_entry.n_curr = interim_n;
  plan_entry.t = 1.0;
  plan_entry.ate = pilot_moments.ate;
  plan_entry.variance = pilot_moments.variance;
  plan_entry.increase = false;
  trial.trace.push_back(plan_entry);

  // Promising-zone gate: trend conditional power at the configured interim
  // fraction, direction-normalized so negative effects are assessed on
  // magnitude.
  const moments::Moments interim_moments = hooks.estimate(trial.dataset, rng);
  const double z = hooks.statistic(interim_moments, interim_n);
  const double cp = tad::conditional_power_trend(
      std::abs(z), config.interim_information_fraction, config.alpha_target);

  tad::IterationTrace interim_entry;
  interim_entry.iteration = 2;
  interim_entry.n_curr = interim_n;
  interim_entry.t = config.interim_information_fraction;
  interim_entry.ate = interim_moments.ate;
  interim_entry.variance = interim_moments.variance;
  interim_entry.cp = cp;

  if (cp >= config.cp_promising_threshold) {
    const double revised_real = hooks.target_size(interim_moments);
    Eigen::Index revised =
        std::isinf(revised_real)
            ? config.n_max
            : static_cast<Eigen::Index>(std::ceil(revised_real));
    revised = std::clamp<Eigen::Index>(revised, 2, config.n_max);
    if (revised > interim_n) {
      append(revised - interim_n);
      interim_entry.n_step = revised - interim_n;
      interim_entry.n_curr = revised;
      interim_entry.increase = true;
    }
  }
  trial.trace.push_back(interim_entry);

  if (final_test == tad::FinalTest::welch)
    return finish_with_welch(trial, config.alpha_target, outcome, method);

  tad::TrialResult result;
  result.method = method;
  result.futility_stopped = false;
  result.final_arm_size = static_cast<Eigen::Index>(trial.dataset.control.size());
  result.trace = std::move(trial.trace);
  result.iterations = static_cast<int>(result.trace.size());
  const si::SiParams si_resolved =
      config.si.resolved(trial.dataset.baseline_index);
  const auto test =
      secrets::run_secrets(trial.dataset.control, trial.dataset.treatment,
                           si_resolved, config.testing, config.t_samples,
                           outcome, rng);
  result.test = test;
  result.decision = test.reject ? tad::Decision::reject : tad::Decision::accept;
  return result;
}

}  // namespace

tad::TrialResult run_standard_tad(const BaselineConfig& config,
                                  cohort::SubjectSource& source, RngStream& rng) {
  const auto outcome = cohort::change_score_outcome(source.baseline_index(),
                                                    source.endpoint_index());
  PromisingZoneHooks hooks;
  hooks.estimate = [&, outcome](const cohort::RctDataset& ds, RngStream& r) {
    return moments::estimate_moments(ds.control, ds.treatment,
                                     moments::MomentMethod::two_sample, 2,
                                     config.si, outcome, r);
  };
  hooks.target_size = [&](const moments::Moments& m) {
    return two_sample_arm_size_real(*m.two_sample, config.alpha_target,
                                    config.power_target);
  };
  hooks.statistic = [](const moments::Moments& m, Eigen::Index n_curr) {
    return tad::interim_statistic(m, n_curr);
  };
  return run_promising_zone(config, source, rng, hooks, tad::FinalTest::welch,
                            "standard_tad");
}

tad::TrialResult run_standard_tad_sie(const BaselineConfig& config,
                                      cohort::SubjectSource& source,
                                      RngStream& rng) {
  const auto outcome = cohort::change_score_outcome(source.baseline_index(),
                                                    source.endpoint_index());
  const si::SiParams si_resolved = config.si.resolved(source.baseline_index());
  PromisingZoneHooks hooks;
  hooks.estimate = [&, si_resolved](const cohort::RctDataset& ds, RngStream& r) {
    return moments::estimate_moments(ds.control, ds.treatment,
                                     moments::MomentMethod::secrets,
                                     config.b_replicates, si_resolved, outcome,
                                     r, config.retune_per_replicate);
  };
  hooks.target_size = [&](const moments::Moments& m) {
    return tad::one_sample_arm_size(m.ate, m.variance, config.alpha_target,
                                    config.power_target);
  };
  hooks.statistic = [](const moments::Moments& m, Eigen::Index n_curr) {
    return tad::interim_statistic(m, n_curr);
  };
  return run_promising_zone(config, source, rng, hooks,
                            tad::FinalTest::secrets_test, "standard_tad_sie");
}

tad::TrialResult run_tad_standard_test(const tad::TadConfig& config,
                                       cohort::SubjectSource& source,
                                       RngStream& rng) {
  tad::TadConfig rewired = config;
  rewired.moment_method = moments::MomentMethod::two_sample;
  rewired.cp_moment_method = moments::MomentMethod::two_sample;
  tad::TrialResult r =
      tad::run_adaptive_trial(rewired, tad::FinalTest::welch, source, rng);
  r.method = "tad_standard_test";
  return r;
}

}  // namespace tadsie::baselines

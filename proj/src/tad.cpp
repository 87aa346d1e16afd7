#include "tadsie/tad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tadsie/errors.hpp"

namespace tadsie::tad {

void TadConfig::validate() const {
  if (n_pilot < 2) throw ValidationError("tad config: n_pilot must be >= 2");
  if (n_pilot > n_max)
    throw ValidationError("tad config: n_pilot must not exceed n_max");
  if (!(alpha_target > 0.0 && alpha_target < 1.0))
    throw ValidationError("tad config: alpha_target must lie in (0,1)");
  if (!(power_target > 0.0 && power_target < 1.0))
    throw ValidationError("tad config: power_target must lie in (0,1)");
  if (!(step_size_scale_factor > 0.0 && step_size_scale_factor <= 1.0))
    throw ValidationError("tad config: step_size_scale_factor must lie in (0,1]");
  if (!(futility_power_boundary >= 0.0 && futility_power_boundary <= 1.0))
    throw ValidationError("tad config: futility_power_boundary must lie in [0,1]");
  if (b_replicates < 2) throw ValidationError("tad config: B must be >= 2");
  if (t_samples < 10) throw ValidationError("tad config: T must be >= 10");
  if (cp_moment_method == moments::MomentMethod::two_sample &&
      moment_method != moments::MomentMethod::two_sample)
    throw ValidationError(
        "tad config: cp_moment_method must be secrets or naive");
  testing.validate();
}

const char* decision_label(Decision d) {
  return d == Decision::reject ? "reject" : "accept";
}

double one_sample_arm_size(double ate, double variance, double alpha,
                           double power) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(power > 0.0 && power < 1.0))
    throw std::domain_error("one_sample_arm_size: alpha and power must lie in (0,1)");
  if (variance < 0.0)
    throw std::domain_error("one_sample_arm_size: variance must be >= 0");
  if (variance == 0.0) return 0.0;
  if (ate == 0.0) return std::numeric_limits<double>::infinity();
  const double k = stats::normal_quantile(1.0 - 0.5 * alpha) +
                   stats::normal_quantile(power);
  return variance * k * k / (2.0 * ate * ate);
}

StepPlan step_from_target(double n_target, Eigen::Index n_curr,
                          Eigen::Index n_max, double scale_factor) {
  if (n_curr < 1) throw std::domain_error("step_from_target: n_curr must be >= 1");
  if (!(scale_factor > 0.0 && scale_factor <= 1.0))
    throw std::domain_error("step_from_target: scale_factor must lie in (0,1]");
  const double cap = std::max(0.0, static_cast<double>(n_max - n_curr));
  const double gap = n_target - static_cast<double>(n_curr);
  const double step_scaled = std::clamp(gap * scale_factor, 0.0, cap);
  const double step_max = std::clamp(gap, 0.0, cap);

  StepPlan plan;
  plan.n_step = static_cast<Eigen::Index>(std::ceil(step_scaled));
  if (step_max <= 0.0) {
    plan.t = 1.0;
  } else {
    plan.t = std::min(1.0, (static_cast<double>(n_curr + plan.n_step)) /
                               (static_cast<double>(n_curr) + step_max));
  }
  return plan;
}

StepPlan get_step_size(double ate, double variance, Eigen::Index n_curr,
                       double alpha, double power, Eigen::Index n_max,
                       double scale_factor) {
  return step_from_target(one_sample_arm_size(ate, variance, alpha, power),
                          n_curr, n_max, scale_factor);
}

namespace {

void check_fraction(double t) {
  if (!(t > 0.0 && t < 1.0))
    throw std::domain_error("conditional power is undefined unless 0 < t < 1");
}

}  // namespace

double conditional_power_two_sided(double z, double t, double alpha) {
  check_fraction(t);
  const double boundary = stats::normal_quantile(1.0 - 0.5 * alpha);
  const double a = z / std::sqrt(t * (1.0 - t));
  const double b = boundary / std::sqrt(1.0 - t);
  return stats::normal_cdf(a - b) + stats::normal_cdf(-a - b);
}

double conditional_power_one_sided(double z, double t, double alpha,
                                   double drift) {
  check_fraction(t);
  const double boundary = stats::normal_quantile(1.0 - alpha);
  return 1.0 - stats::normal_cdf((boundary - z * std::sqrt(t) -
                                  drift * (1.0 - t)) /
                                 std::sqrt(1.0 - t));
}

double conditional_power_trend(double z, double t, double alpha) {
  check_fraction(t);
  const double boundary = stats::normal_quantile(1.0 - alpha);
  return stats::normal_cdf(z / std::sqrt(t * (1.0 - t)) -
                           boundary / std::sqrt(1.0 - t));
}

double interim_statistic(const moments::Moments& m, Eigen::Index n_curr) {
  const double pooled =
      m.method == moments::MomentMethod::two_sample ? 1.0 : 2.0;
  const double var_of_mean =
      m.variance / (pooled * static_cast<double>(n_curr));
  if (var_of_mean <= 0.0) {
    if (m.ate == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), m.ate);
  }
  return m.ate / std::sqrt(var_of_mean);
}

double interim_cp(const moments::Moments& m, Eigen::Index n_curr, double t,
                  double alpha) {
  check_fraction(t);
  if (m.variance <= 0.0) return m.ate == 0.0 ? 0.0 : 1.0;
  return conditional_power_two_sided(interim_statistic(m, n_curr), t, alpha);
}

bool check_for_futility(const moments::Moments& m, Eigen::Index n_curr, double t,
                        double alpha, double futility_power_boundary) {
  if (futility_power_boundary <= 0.0) return false;
  return interim_cp(m, n_curr, t, alpha) <= futility_power_boundary;
}

PilotOutput conduct_pilot_study(const TadConfig& config,
                                cohort::SubjectSource& source, RngStream& rng) {
  config.validate();
  PilotOutput pilot;
  pilot.dataset.visits = source.visits();
  pilot.dataset.baseline_index = source.baseline_index();
  pilot.dataset.endpoint_index = source.endpoint_index();
  auto [ctrl, treat] = source.recruit(config.n_pilot, rng);
  pilot.dataset.control = std::move(ctrl);
  pilot.dataset.treatment = std::move(treat);

  const si::SiParams si_resolved =
      config.si.resolved(pilot.dataset.baseline_index);
  const auto outcome = cohort::change_score_outcome(
      pilot.dataset.baseline_index, pilot.dataset.endpoint_index);
  pilot.moments = moments::estimate_moments(
      pilot.dataset.control, pilot.dataset.treatment, config.moment_method,
      config.b_replicates, si_resolved, outcome, rng,
      config.retune_per_replicate);
  return pilot;
}

namespace {

double target_arm_size(const moments::Moments& m, const TadConfig& config) {
  if (m.method == moments::MomentMethod::two_sample) {
    // Unhalved two-sample formula: the variance field already carries the
    // per-arm variance sum.
    const double halved = one_sample_arm_size(m.ate, m.variance,
                                              config.alpha_target,
                                              config.power_target);
    return 2.0 * halved;
  }
  return one_sample_arm_size(m.ate, m.variance, config.alpha_target,
                             config.power_target);
}

}  // namespace

SearchOutput run_sample_size_search(PilotOutput& pilot, const TadConfig& config,
                                    cohort::SubjectSource& source,
                                    RngStream& rng) {
  config.validate();
  cohort::RctDataset& ds = pilot.dataset;
  const si::SiParams si_resolved = config.si.resolved(ds.baseline_index);
  const auto outcome =
      cohort::change_score_outcome(ds.baseline_index, ds.endpoint_index);

  SearchOutput out;
  for (int iteration = 1;; ++iteration) {
    const auto n_curr = static_cast<Eigen::Index>(ds.control.size());
    const StepPlan plan =
        step_from_target(target_arm_size(pilot.moments, config), n_curr,
                         config.n_max, config.step_size_scale_factor);
    if (plan.n_step == 0) break;

    auto [ctrl_new, treat_new] = source.recruit(plan.n_step, rng);
    ds.control.insert(ds.control.end(),
                      std::make_move_iterator(ctrl_new.begin()),
                      std::make_move_iterator(ctrl_new.end()));
    ds.treatment.insert(ds.treatment.end(),
                        std::make_move_iterator(treat_new.begin()),
                        std::make_move_iterator(treat_new.end()));
    const auto n_new = static_cast<Eigen::Index>(ds.control.size());

    pilot.moments = moments::estimate_moments(
        ds.control, ds.treatment, config.moment_method, config.b_replicates,
        si_resolved, outcome, rng, config.retune_per_replicate);

    IterationTrace entry;
    entry.iteration = iteration;
    entry.n_step = plan.n_step;
    entry.n_curr = n_new;
    entry.t = plan.t;
    entry.ate = pilot.moments.ate;
    entry.variance = pilot.moments.variance;
    entry.increase = true;

    if (plan.t < 1.0) {
      const moments::Moments cp_moments =
          config.cp_moment_method == config.moment_method ||
                  config.moment_method == moments::MomentMethod::two_sample
              ? pilot.moments
              : moments::estimate_moments(ds.control, ds.treatment,
                                          config.cp_moment_method,
                                          config.b_replicates, si_resolved,
                                          outcome, rng,
                                          config.retune_per_replicate);
      entry.cp = interim_cp(cp_moments, n_new, plan.t, config.alpha_target);
      entry.futility = config.futility_power_boundary > 0.0 &&
                       *entry.cp <= config.futility_power_boundary;
    }
    out.trace.push_back(entry);
    if (entry.futility) {
      out.futility_stopped = true;
      break;
    }
  }
  return out;
}

TrialResult run_adaptive_trial(const TadConfig& config, FinalTest final_test,
                               cohort::SubjectSource& source, RngStream& rng) {
  PilotOutput pilot = conduct_pilot_study(config, source, rng);
  SearchOutput search = run_sample_size_search(pilot, config, source, rng);

  TrialResult result;
  result.futility_stopped = search.futility_stopped;
  result.final_arm_size = static_cast<Eigen::Index>(pilot.dataset.control.size());
  result.iterations = static_cast<int>(search.trace.size());
  result.trace = std::move(search.trace);

  if (search.futility_stopped) {
    result.decision = Decision::accept;  // futile trials accept by convention
    return result;
  }

  const auto outcome = cohort::change_score_outcome(
      pilot.dataset.baseline_index, pilot.dataset.endpoint_index);
  stats::TestDecision test;
  if (final_test == FinalTest::secrets_test) {
    const si::SiParams si_resolved =
        config.si.resolved(pilot.dataset.baseline_index);
    test = secrets::run_secrets(pilot.dataset.control, pilot.dataset.treatment,
                                si_resolved, config.testing, config.t_samples,
                                outcome, rng);
  } else {
    test = stats::welch_t_test(
        cohort::outcomes_of(pilot.dataset.control, outcome),
        cohort::outcomes_of(pilot.dataset.treatment, outcome),
        config.alpha_target);
  }
  result.test = test;
  result.decision = test.reject ? Decision::reject : Decision::accept;
  return result;
}

TrialResult run_tad_sie(const TadConfig& config, cohort::SubjectSource& source,
                        RngStream& rng) {
  if (config.moment_method == moments::MomentMethod::two_sample)
    throw ConfigurationError(
        "run_tad_sie pairs with ITE-based moments; use the two-sample variant");
  TrialResult r = run_adaptive_trial(config, FinalTest::secrets_test, source, rng);
  r.method = "tad_sie";
  return r;
}

}  // namespace tadsie::tad

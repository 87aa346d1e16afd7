#include "tadsie/moments.hpp"

#include <cmath>

#include "tadsie/errors.hpp"
#include "tadsie/stats.hpp"

namespace tadsie::moments {

const char* moment_method_label(MomentMethod m) {
  switch (m) {
    case MomentMethod::secrets: return "secrets";
    case MomentMethod::naive: return "naive";
    case MomentMethod::two_sample: return "two_sample";
  }
  return "unknown";
}

MomentMethod parse_moment_method(const std::string& label) {
  if (label == "secrets") return MomentMethod::secrets;
  if (label == "naive") return MomentMethod::naive;
  if (label == "two_sample") return MomentMethod::two_sample;
  throw ConfigurationError("unknown moment method '" + label + "'");
}

double estimate_ate(const std::vector<cohort::PatientRecord>& x_ctrl,
                    const std::vector<cohort::PatientRecord>& x_treat,
                    const si::SiParams& si_params, const cohort::OutcomeFn& outcome,
                    RngStream& rng,
                    const secrets::SiRegularization* fixed_regularization) {
  if (x_ctrl.size() < 2 || x_treat.size() < 2)
    throw InsufficientDataError("estimate_ate: each arm needs >= 2 subjects");
  const secrets::IteSet set = secrets::estimate_ite_set(
      x_ctrl, x_treat, si_params, outcome, rng, fixed_regularization);
  return set.pooled().mean();
}

double replicate_variance(const std::function<double(RngStream&)>& draw_estimate,
                          int b_replicates, RngStream& rng) {
  if (b_replicates < 2)
    throw ValidationError("replicate_variance: need at least 2 replicates");
  Eigen::VectorXd draws(b_replicates);
  for (int b = 0; b < b_replicates; ++b) {
    RngStream replicate_rng = rng.derive(static_cast<std::uint64_t>(b));
    draws[b] = draw_estimate(replicate_rng);
  }
  return stats::sample_stats(draws).second;
}

double variance_of_ate(const std::vector<cohort::PatientRecord>& x_ctrl,
                       const std::vector<cohort::PatientRecord>& x_treat,
                       int b_replicates, const si::SiParams& si_params,
                       const cohort::OutcomeFn& outcome, RngStream& rng,
                       bool retune_per_replicate) {
  std::optional<secrets::SiRegularization> shared_regs;
  if (!retune_per_replicate)
    shared_regs = secrets::tune_directions(x_ctrl, x_treat, si_params, rng);

  auto draw = [&](RngStream& replicate_rng) {
    const auto ctrl_b =
        stats::bootstrap_resample(x_ctrl, x_ctrl.size(), replicate_rng);
    const auto treat_b =
        stats::bootstrap_resample(x_treat, x_treat.size(), replicate_rng);
    return estimate_ate(ctrl_b, treat_b, si_params, outcome, replicate_rng,
                        shared_regs ? &*shared_regs : nullptr);
  };
  return replicate_variance(draw, b_replicates, rng);
}

double variance_of_outcome(double variance_of_ate, Eigen::Index n_curr) {
  if (variance_of_ate < 0.0 || n_curr < 0)
    throw ValidationError("variance_of_outcome: inputs must be nonnegative");
  return variance_of_ate * 2.0 * static_cast<double>(n_curr);
}

TwoSampleMoments estimate_two_sample_moments(
    const std::vector<cohort::PatientRecord>& x_ctrl,
    const std::vector<cohort::PatientRecord>& x_treat,
    const cohort::OutcomeFn& outcome) {
  if (x_ctrl.size() < 2 || x_treat.size() < 2)
    throw InsufficientDataError(
        "estimate_two_sample_moments: each arm needs >= 2 subjects");
  const auto [mc, vc] = stats::sample_stats(cohort::outcomes_of(x_ctrl, outcome));
  const auto [mt, vt] = stats::sample_stats(cohort::outcomes_of(x_treat, outcome));
  return {mt - mc, vc, vt};
}

Moments estimate_moments(const std::vector<cohort::PatientRecord>& x_ctrl,
                         const std::vector<cohort::PatientRecord>& x_treat,
                         MomentMethod method, int b_replicates,
                         const si::SiParams& si_params,
                         const cohort::OutcomeFn& outcome, RngStream& rng,
                         bool retune_per_replicate) {
  Moments m;
  m.method = method;
  const auto pooled_count =
      static_cast<double>(x_ctrl.size() + x_treat.size());
  switch (method) {
    case MomentMethod::secrets: {
      m.ate = estimate_ate(x_ctrl, x_treat, si_params, outcome, rng);
      m.variance_of_ate = variance_of_ate(x_ctrl, x_treat, b_replicates,
                                          si_params, outcome, rng,
                                          retune_per_replicate);
      m.variance = m.variance_of_ate * pooled_count;
      break;
    }
    case MomentMethod::naive: {
      const secrets::IteSet set =
          secrets::estimate_ite_set(x_ctrl, x_treat, si_params, outcome, rng);
      const auto [mean, var] = stats::sample_stats(set.pooled());
      m.ate = mean;
      m.variance = var;
      m.variance_of_ate = var / pooled_count;
      break;
    }
    case MomentMethod::two_sample: {
      const TwoSampleMoments ts =
          estimate_two_sample_moments(x_ctrl, x_treat, outcome);
      m.ate = ts.ate;
      m.variance = ts.var_control + ts.var_treatment;  // Welch numerator sum
      m.variance_of_ate =
          ts.var_control / static_cast<double>(x_ctrl.size()) +
          ts.var_treatment / static_cast<double>(x_treat.size());
      m.two_sample = ts;
      break;
    }
  }
  return m;
}

}  // namespace tadsie::moments

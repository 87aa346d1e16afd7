#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tadsie/cohort.hpp"
#include "tadsie/rng.hpp"
#include "tadsie/secrets.hpp"
#include "tadsie/synthetic_intervention.hpp"

namespace tadsie::moments {

enum class MomentMethod { secrets, naive, two_sample };

const char* moment_method_label(MomentMethod m);
MomentMethod parse_moment_method(const std::string& label);  // ConfigurationError

// Eq.-style raw ingredients of the two-sample test: mean outcome difference
// and per-arm outcome variances.
struct TwoSampleMoments {
  double ate = 0.0;
  double var_control = 0.0;
  double var_treatment = 0.0;
};

// The (delta, sigma^2) pair driving sample-size formulas. `variance` is the
// equivalent-iid outcome variance; for method=secrets it equals
// variance_of_ate times the pooled ITE count. For method=two_sample,
// `variance` is the variance sum entering the unhalved arm-size formula and
// `two_sample` carries the per-arm split.
struct Moments {
  double ate = 0.0;
  double variance = 0.0;
  double variance_of_ate = 0.0;
  MomentMethod method = MomentMethod::secrets;
  std::optional<TwoSampleMoments> two_sample;
};

// Mean of the pooled ITEs from both counterfactual directions.
double estimate_ate(const std::vector<cohort::PatientRecord>& x_ctrl,
                    const std::vector<cohort::PatientRecord>& x_treat,
                    const si::SiParams& si_params, const cohort::OutcomeFn& outcome,
                    RngStream& rng,
                    const secrets::SiRegularization* fixed_regularization = nullptr);

// Sample variance over B draws of an estimator; the skeleton of the
// bootstrap below, exposed so dependence structures can be studied directly.
double replicate_variance(const std::function<double(RngStream&)>& draw_estimate,
                          int b_replicates, RngStream& rng);

// Bootstrap variance of the ATE: each replicate resamples both arms with
// replacement (at their current sizes) and re-estimates the ATE. Unless
// retune_per_replicate is set, ridge strengths are tuned once on the full
// arms and reused across replicates.
double variance_of_ate(const std::vector<cohort::PatientRecord>& x_ctrl,
                       const std::vector<cohort::PatientRecord>& x_treat,
                       int b_replicates, const si::SiParams& si_params,
                       const cohort::OutcomeFn& outcome, RngStream& rng,
                       bool retune_per_replicate = false);

// Equivalent-iid outcome variance from the ATE variance: scales by the
// pooled ITE count 2 * n_curr.
double variance_of_outcome(double variance_of_ate, Eigen::Index n_curr);

TwoSampleMoments estimate_two_sample_moments(
    const std::vector<cohort::PatientRecord>& x_ctrl,
    const std::vector<cohort::PatientRecord>& x_treat,
    const cohort::OutcomeFn& outcome);

Moments estimate_moments(const std::vector<cohort::PatientRecord>& x_ctrl,
                         const std::vector<cohort::PatientRecord>& x_treat,
                         MomentMethod method, int b_replicates,
                         const si::SiParams& si_params,
                         const cohort::OutcomeFn& outcome, RngStream& rng,
                         bool retune_per_replicate = false);

}  // namespace tadsie::moments

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "tadsie/cohort.hpp"
#include "tadsie/rng.hpp"
#include "tadsie/stats.hpp"
#include "tadsie/synthetic_intervention.hpp"

namespace tadsie::secrets {

// Critical-value tuner parameters. t_lower/t_upper bound the initial search
// range; t_limit_exp is the factor by which the range expands or shrinks when
// every candidate over- or under-shoots the target significance level.
struct TestingParams {
  double alpha_target = 0.05;
  double t_lower = 3.0;
  double t_upper = 5.0;
  double t_limit_exp = 2.0;
  int n_s = 10;
  double delta_alpha = 1e-3;
  int max_rounds = 20;

  void validate() const;
};

// Per-arm individual treatment effects, both carried with treatment-minus-
// control sign (the treatment-arm values are the negated counterfactual
// differences), so pooling is plain concatenation.
struct IteSet {
  Eigen::VectorXd control_ites;
  Eigen::VectorXd treatment_ites;

  Eigen::VectorXd pooled() const;
};

// Ridge strengths tuned per counterfactual direction, keyed by which arm
// serves as the donor pool.
struct SiRegularization {
  double donors_treatment = 0.0;  // used when predicting under treatment
  double donors_control = 0.0;    // used when predicting under control
};

Eigen::MatrixXd trajectories_matrix(const std::vector<cohort::PatientRecord>& records);

// Counterfactual-minus-observed outcome for every unexposed subject, using
// the exposed arm as donors. Tunes the ridge strength internally unless
// `regularization` is supplied.
Eigen::VectorXd estimate_ites(const std::vector<cohort::PatientRecord>& x_unexposed,
                              const std::vector<cohort::PatientRecord>& x_exposed,
                              const si::SiParams& si_params,
                              const cohort::OutcomeFn& outcome, RngStream& rng,
                              std::optional<double> regularization = std::nullopt);

SiRegularization tune_directions(const std::vector<cohort::PatientRecord>& x_ctrl,
                                 const std::vector<cohort::PatientRecord>& x_treat,
                                 const si::SiParams& si_params, RngStream& rng);

// Runs estimate_ites in both directions and sign-aligns the treatment arm.
IteSet estimate_ite_set(const std::vector<cohort::PatientRecord>& x_ctrl,
                        const std::vector<cohort::PatientRecord>& x_treat,
                        const si::SiParams& si_params,
                        const cohort::OutcomeFn& outcome, RngStream& rng,
                        const SiRegularization* fixed_regularization = nullptr);

// One-sample t statistic: mean / sqrt(var/n). Throws
// DegenerateStatisticError when the sample variance vanishes.
double test_statistic(Eigen::Ref<const Eigen::VectorXd> pooled_ites);

// T draws from the null distribution of the test statistic: each iteration
// bootstraps two pseudo-arms (each of the control arm's size) from the
// control arm and pushes them through the ITE pipeline. A degenerate
// iteration is resampled once before the error propagates.
Eigen::VectorXd sample_null(const std::vector<cohort::PatientRecord>& x_ctrl,
                            int t_samples, const si::SiParams& si_params,
                            const cohort::OutcomeFn& outcome, RngStream& rng);

struct CriticalValueResult {
  double value = 0.0;
  double achieved_alpha = 0.0;
  bool converged = false;  // false carries the best-so-far candidate
};

// Range-refinement search for the critical value whose empirical significance
// over the null samples matches alpha_target (ties at the candidate count as
// non-rejection).
CriticalValueResult tune_critical_value(Eigen::Ref<const Eigen::VectorXd> null_samples,
                                        const TestingParams& params);

// The full hypothesis test: pooled ITEs, tuned critical value, two-sided
// decision.
stats::TestDecision run_secrets(const std::vector<cohort::PatientRecord>& x_ctrl,
                                const std::vector<cohort::PatientRecord>& x_treat,
                                const si::SiParams& si_params,
                                const TestingParams& testing, int t_samples,
                                const cohort::OutcomeFn& outcome, RngStream& rng);

// Convenience overload resolving SI parameters and the change-score outcome
// from the dataset.
stats::TestDecision run_secrets(const cohort::RctDataset& dataset,
                                const si::SiParams& si_params,
                                const TestingParams& testing, int t_samples,
                                RngStream& rng);

}  // namespace tadsie::secrets

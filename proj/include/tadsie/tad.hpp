#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tadsie/cohort.hpp"
#include "tadsie/moments.hpp"
#include "tadsie/rng.hpp"
#include "tadsie/secrets.hpp"
#include "tadsie/stats.hpp"

namespace tadsie::tad {

// Trial engine hyperparameters. Defaults follow the standard configuration:
// pilot arms of 30, 5% significance, 80% power, 1500-subject cap, and 100
// bootstrap/null samples.
struct TadConfig {
  Eigen::Index n_pilot = 30;
  double alpha_target = 0.05;
  double power_target = 0.8;
  Eigen::Index n_max = 1500;
  double step_size_scale_factor = 0.5;
  double futility_power_boundary = 0.11;  // 0 disables futility stopping
  int b_replicates = 100;
  int t_samples = 100;
  si::SiParams si;
  secrets::TestingParams testing;
  moments::MomentMethod moment_method = moments::MomentMethod::secrets;
  moments::MomentMethod cp_moment_method = moments::MomentMethod::secrets;
  bool retune_per_replicate = false;

  void validate() const;
};

// One sample-size-search iteration: the step taken, the information fraction
// it implies, the refreshed moments, and the futility verdict. cp is absent
// when t == 1 (conditional power is undefined there and the check is
// skipped). `increase` marks recruitment beyond the initially planned size.
struct IterationTrace {
  int iteration = 0;
  Eigen::Index n_step = 0;
  Eigen::Index n_curr = 0;
  double t = 1.0;
  double ate = 0.0;
  double variance = 0.0;
  std::optional<double> cp;
  bool futility = false;
  bool increase = false;
};

enum class Decision { accept, reject };

const char* decision_label(Decision d);

struct TrialResult {
  Decision decision = Decision::accept;
  bool futility_stopped = false;
  Eigen::Index final_arm_size = 0;
  int iterations = 0;
  std::vector<IterationTrace> trace;
  std::optional<stats::TestDecision> test;  // unset when futility decided
  std::string method;
};

// Arm size for the one-sample two-sided test, halved because the pooled ITEs
// span both arms: sigma^2 (z_{1-a/2} + z_{1-b})^2 / (2 delta^2). Returns
// +infinity when the effect is zero (callers clamp to n_max) and 0 when the
// variance is zero.
double one_sample_arm_size(double ate, double variance, double alpha,
                           double power);

struct StepPlan {
  Eigen::Index n_step = 0;
  double t = 1.0;  // information fraction after taking the step
};

// Scaled, clamped step toward a real-valued target arm size; the information
// fraction compares the stepped size against the unscaled (maximum) step.
StepPlan step_from_target(double n_target, Eigen::Index n_curr,
                          Eigen::Index n_max, double scale_factor);

StepPlan get_step_size(double ate, double variance, Eigen::Index n_curr,
                       double alpha, double power, Eigen::Index n_max,
                       double scale_factor);

// Conditional power at information fraction t in (0,1).
double conditional_power_two_sided(double z, double t, double alpha);
// One-sided form under a specified drift of the final test statistic.
double conditional_power_one_sided(double z, double t, double alpha,
                                   double drift);
// One-sided trend form: the drift is taken from the interim data, z/sqrt(t).
double conditional_power_trend(double z, double t, double alpha);

// Interim test statistic implied by the moments: delta / sqrt(sigma^2 / N)
// with N the pooled sample count behind the estimate (2 n_curr for
// ITE-pooled moments, n_curr for two-sample moments).
double interim_statistic(const moments::Moments& m, Eigen::Index n_curr);

// Two-sided conditional power at the interim statistic; degenerate variance
// resolves to 1 (certain rejection) unless the effect is also zero, which
// resolves to 0.
double interim_cp(const moments::Moments& m, Eigen::Index n_curr, double t,
                  double alpha);

// Futility verdict: cp <= futility_power_boundary. A boundary of 0 disables
// stopping entirely.
bool check_for_futility(const moments::Moments& m, Eigen::Index n_curr, double t,
                        double alpha, double futility_power_boundary);

struct PilotOutput {
  cohort::RctDataset dataset;
  moments::Moments moments;
};

PilotOutput conduct_pilot_study(const TadConfig& config,
                                cohort::SubjectSource& source, RngStream& rng);

struct SearchOutput {
  bool futility_stopped = false;
  std::vector<IterationTrace> trace;
};

// The iterative search: step, recruit, re-estimate, check futility, repeat.
// Terminates on a zero step, futility, or the n_max clamp. Appends to the
// pilot's dataset in place.
SearchOutput run_sample_size_search(PilotOutput& pilot, const TadConfig& config,
                                    cohort::SubjectSource& source,
                                    RngStream& rng);

enum class FinalTest { secrets_test, welch };

// Pilot -> search -> (futility ? accept : final test).
TrialResult run_adaptive_trial(const TadConfig& config, FinalTest final_test,
                               cohort::SubjectSource& source, RngStream& rng);

TrialResult run_tad_sie(const TadConfig& config, cohort::SubjectSource& source,
                        RngStream& rng);

}  // namespace tadsie::tad

#pragma once

#include "tadsie/cohort.hpp"
#include "tadsie/moments.hpp"
#include "tadsie/rng.hpp"
#include "tadsie/tad.hpp"

namespace tadsie::baselines {

// Shared configuration for the comparison designs. The interim analysis of
// the trend-adaptive baselines happens at a fixed information fraction just
// below 1 (conditional power is undefined at 1), and a sample-size increase
// is only allowed when trend conditional power clears the promising-zone
// threshold.
struct BaselineConfig {
  Eigen::Index n_pilot = 30;
  double alpha_target = 0.05;
  double power_target = 0.8;
  Eigen::Index n_max = 1500;
  double interim_information_fraction = 0.99;
  double cp_promising_threshold = 0.5;
  // Used only by the SECRETS-backed hybrid.
  int b_replicates = 100;
  int t_samples = 100;
  si::SiParams si;
  secrets::TestingParams testing;
  bool retune_per_replicate = false;

  void validate() const;
};

// Arm size for the two-sample two-sided test (no halving):
// (var_c + var_t)(z_{1-a/2} + z_{1-b})^2 / delta^2. Infinite when the effect
// is zero.
double two_sample_arm_size_real(const moments::TwoSampleMoments& m, double alpha,
                                double power);

// Ceiling of the real-valued size, clamped to [2, n_max].
Eigen::Index two_sample_arm_size(const moments::TwoSampleMoments& m, double alpha,
                                 double power, Eigen::Index n_max);

// Pilot -> two-sample sizing -> recruit -> Welch test. One sizing pass, no
// adaptation.
tad::TrialResult run_fixed_sample_design(const BaselineConfig& config,
                                         cohort::SubjectSource& source,
                                         RngStream& rng);

// Fixed-design plan plus one promising-zone interim analysis: the size may be
// re-estimated upward (never downward) when trend conditional power clears
// the threshold. Welch final test.
tad::TrialResult run_standard_tad(const BaselineConfig& config,
                                  cohort::SubjectSource& source, RngStream& rng);

// Standard-TAD control flow with ITE-based moment estimation, one-sample
// sizing, and a SECRETS final test.
tad::TrialResult run_standard_tad_sie(const BaselineConfig& config,
                                      cohort::SubjectSource& source,
                                      RngStream& rng);

// The adaptive engine rewired for standard testing: two-sample moments,
// unhalved sizing, two-sample interim statistic, Welch final test.
tad::TrialResult run_tad_standard_test(const tad::TadConfig& config,
                                       cohort::SubjectSource& source,
                                       RngStream& rng);

}  // namespace tadsie::baselines

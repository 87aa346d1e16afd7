#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tadsie/cohort.hpp"
#include "tadsie/stats.hpp"
#include "tadsie/tad.hpp"

namespace tadsie::harness {

using TrialRunner =
    std::function<tad::TrialResult(cohort::SubjectSource&, RngStream&)>;

// Monte Carlo aggregate over n_trials independent simulated trials. The
// rejection rate estimates power under H1 and the significance level under
// H0; its binomial standard error is reported alongside.
struct EvaluationReport {
  std::string method;
  cohort::Hypothesis hypothesis = cohort::Hypothesis::h1;
  int n_trials = 0;
  double rejection_rate = 0.0;
  double rejection_rate_se = 0.0;
  double futility_rate = 0.0;
  double increase_rate = 0.0;
  stats::BoxSummary arm_size_summary;
  stats::BoxSummary iterations_summary;
  std::uint64_t seed = 0;
};

// Runs n_trials trials of `runner`. Trial i draws subjects from a pool built
// over `original` under the given hypothesis, using an RNG stream derived
// from (seed, i); results are identical for any worker count.
EvaluationReport simulate_trials(const TrialRunner& runner,
                                 const std::string& method_name,
                                 const cohort::RctDataset& original,
                                 cohort::Hypothesis hypothesis, int n_trials,
                                 std::uint64_t seed, int workers = 1);

struct SweepCell {
  double step_size_scale_factor = 0.0;
  double futility_power_boundary = 0.0;
  EvaluationReport h0;
  EvaluationReport h1;
  bool feasible = false;
};

struct SweepReport {
  double power_target = 0.0;
  double alpha_target = 0.0;
  int n_trials = 0;
  std::uint64_t seed = 0;
  std::vector<SweepCell> cells;
};

// Full Cartesian sweep of the trial engine over (scale factor, futility
// boundary), each cell evaluated under both hypotheses with the same base
// seed. A cell is feasible when estimated power reaches power_target - 0.01
// and estimated significance stays within alpha_target + 0.01 (one point of
// slack against Monte Carlo noise at 100 trials).
SweepReport sweep(const tad::TadConfig& base, const cohort::RctDataset& original,
                  const std::vector<double>& scale_factors,
                  const std::vector<double>& boundaries, int n_trials,
                  std::uint64_t seed, int workers = 1);

// JSON serialization (keys alphabetically ordered, hence stable).
nlohmann::json to_json(const stats::BoxSummary& s);
nlohmann::json to_json(const stats::TestDecision& d);
nlohmann::json to_json(const tad::IterationTrace& t);
nlohmann::json to_json(const tad::TrialResult& r);
nlohmann::json to_json(const EvaluationReport& r);
nlohmann::json to_json(const SweepReport& r);

EvaluationReport evaluation_from_json(const nlohmann::json& j);
SweepReport sweep_from_json(const nlohmann::json& j);

// CSV rendering: one row per evaluation (or per sweep cell and hypothesis),
// box summaries flattened into <prefix>_<field> columns.
void write_evaluation_csv(const std::vector<EvaluationReport>& reports,
                          std::ostream& out);
void write_sweep_csv(const SweepReport& report, std::ostream& out);

}  // namespace tadsie::harness

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tadsie/rng.hpp"

namespace tadsie::cohort {

enum class Arm { control, treatment };

const char* arm_label(Arm arm);
Arm parse_arm(const std::string& label);  // throws ParseError on unknown labels

struct PatientRecord {
  std::string subject_id;
  Arm arm = Arm::control;
  Eigen::VectorXd trajectory;  // one score per visit
};

// Two-arm trial data. baseline_index/endpoint_index identify the visits that
// define the primary outcome (change score endpoint - baseline).
struct RctDataset {
  Eigen::Index visits = 0;
  Eigen::Index baseline_index = 0;
  Eigen::Index endpoint_index = 0;
  std::vector<PatientRecord> control;
  std::vector<PatientRecord> treatment;

  void validate() const;  // throws ValidationError
};

// Synthetic trajectory model: per-visit score =
//   baseline + control_drift * visit + subject loadings . factor curves + noise,
// with treatment subjects accruing a per-subject effect tau_i ~
// N(treatment_effect_mean, treatment_effect_sd^2) that ramps linearly from 0
// at baseline_index to tau_i at endpoint_index. Factor curves are drawn once
// per cohort and shared across subjects so counterfactual regression has
// cross-subject structure to exploit.
struct CohortGenConfig {
  Eigen::Index visits = 6;
  Eigen::Index baseline_index = 2;
  Eigen::Index endpoint_index = 5;
  double baseline_mean = 50.0;
  double baseline_sd = 5.0;
  double control_drift = -0.5;  // per visit
  double treatment_effect_mean = 0.0;
  double treatment_effect_sd = 0.0;
  double noise_sd = 1.0;
  Eigen::Index latent_factor_count = 2;
  double latent_loading_sd = 1.0;

  void validate() const;  // throws ValidationError
};

RctDataset generate_cohort(const CohortGenConfig& config, Eigen::Index n_control,
                           Eigen::Index n_treatment, RngStream& rng);

// Primary outcome of a trajectory: score change from baseline to endpoint.
double outcome_change_score(const Eigen::VectorXd& trajectory,
                            Eigen::Index baseline_index,
                            Eigen::Index endpoint_index);

using OutcomeFn = std::function<double(const Eigen::VectorXd&)>;

OutcomeFn change_score_outcome(Eigen::Index baseline_index,
                               Eigen::Index endpoint_index);

Eigen::VectorXd outcomes_of(const std::vector<PatientRecord>& records,
                            const OutcomeFn& outcome);

// CSV persistence. Layout: header `subject_id,arm,v0,...,v{V-1}`, one subject
// per row, arm in {control,treatment}. baseline/endpoint indices travel in a
// JSON sidecar at `<path>.meta.json`.
void write_dataset_csv(const RctDataset& dataset, std::ostream& out);
RctDataset parse_dataset_csv(std::istream& in, Eigen::Index baseline_index,
                             Eigen::Index endpoint_index);
void save_dataset(const RctDataset& dataset, const std::string& csv_path);
RctDataset load_dataset(const std::string& csv_path);

// Where trial subjects come from. Implementations recruit n_step fresh
// subjects per arm; datasets built on top of them own immutable records.
class SubjectSource {
 public:
  virtual ~SubjectSource() = default;
  virtual std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>>
  recruit(Eigen::Index n_step, RngStream& rng) = 0;
  virtual Eigen::Index visits() const = 0;
  virtual Eigen::Index baseline_index() const = 0;
  virtual Eigen::Index endpoint_index() const = 0;
};

// Unlimited source drawing fresh subjects from the generator model. Factor
// curves are drawn once at construction (from curve_rng) and shared by every
// subject the source recruits.
class GeneratorSource final : public SubjectSource {
 public:
  GeneratorSource(CohortGenConfig config, RngStream& curve_rng);

  std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>> recruit(
      Eigen::Index n_step, RngStream& rng) override;
  Eigen::Index visits() const override { return config_.visits; }
  Eigen::Index baseline_index() const override { return config_.baseline_index; }
  Eigen::Index endpoint_index() const override { return config_.endpoint_index; }

 private:
  CohortGenConfig config_;
  Eigen::MatrixXd factor_curves_;  // latent_factor_count x visits, fixed per source
  std::uint64_t next_id_ = 0;
};

enum class Hypothesis { h0, h1 };

const char* hypothesis_label(Hypothesis h);

// Resamples subjects from an existing trial. Under h1 each arm draws from its
// own original arm; under h0 both arms draw from the original control arm.
// With replacement by default; without replacement the pools deplete and an
// exhausted pool raises RecruitmentError.
class PoolSource final : public SubjectSource {
 public:
  PoolSource(RctDataset original, Hypothesis hypothesis,
             bool with_replacement = true);

  std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>> recruit(
      Eigen::Index n_step, RngStream& rng) override;
  Eigen::Index visits() const override { return original_.visits; }
  Eigen::Index baseline_index() const override { return original_.baseline_index; }
  Eigen::Index endpoint_index() const override { return original_.endpoint_index; }

 private:
  std::vector<PatientRecord> draw(const std::vector<PatientRecord>& pool,
                                  std::vector<std::size_t>& remaining, Arm arm,
                                  Eigen::Index n_step, RngStream& rng);

  RctDataset original_;
  Hypothesis hypothesis_;
  bool with_replacement_;
  std::vector<std::size_t> remaining_control_;
  std::vector<std::size_t> remaining_treatment_;
};

std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>> recruit(
    SubjectSource& source, Eigen::Index n_step, RngStream& rng);

}  // namespace tadsie::cohort

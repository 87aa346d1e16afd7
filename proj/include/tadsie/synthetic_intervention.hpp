#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tadsie/rng.hpp"

namespace tadsie::si {

// Counterfactual regression hyperparameters. Donor trajectories are matched
// on the pre-period (visits [0, pre_period_end)); the remaining visits are
// predicted. pre_period_end = 0 means "resolve to baseline_index + 1 from the
// dataset" (done by the callers that know the dataset).
struct SiParams {
  double r_train_val = 7.0 / 3.0;
  std::vector<double> ridge_grid = {0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  Eigen::Index pre_period_end = 0;

  SiParams resolved(Eigen::Index baseline_index) const;
  void validate(Eigen::Index visits) const;  // requires resolved pre_period_end
};

// Per-visit z-scoring statistics computed from a donor pool. Degenerate
// visits (zero donor variance) get scale 1.
struct NormalizationState {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

NormalizationState donor_normalization(const Eigen::MatrixXd& donors);

// Rows are trajectories; columns are visits.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& rows,
                               const NormalizationState& norm);
Eigen::MatrixXd unnormalize_rows(const Eigen::MatrixXd& rows,
                                 const NormalizationState& norm);

// Ridge weights expressing each target's pre-period as a combination of the
// donors' pre-periods, solved through the P x P Gram system (P = pre-period
// length). regularization = 0 uses the minimum-norm least-squares solution.
// donors_pre: n_donors x P, targets_pre: n_targets x P; returns n_donors x
// n_targets.
Eigen::MatrixXd ridge_weights(const Eigen::MatrixXd& donors_pre,
                              const Eigen::MatrixXd& targets_pre,
                              double regularization);

struct CounterfactualResult {
  Eigen::VectorXd trajectory;  // full-length counterfactual, unnormalized
  Eigen::VectorXd weights;     // donor weights in normalized space
};

// Counterfactual trajectory of one target under the donors' intervention.
CounterfactualResult predict_counterfactual(const Eigen::MatrixXd& donors,
                                            const Eigen::VectorXd& target,
                                            double regularization,
                                            const SiParams& params);

// Batched variant: one row per target, sharing a single Gram factorization.
Eigen::MatrixXd predict_counterfactuals(const Eigen::MatrixXd& donors,
                                        const Eigen::MatrixXd& targets,
                                        double regularization,
                                        const SiParams& params);

// Picks the ridge strength from params.ridge_grid by a donor-level
// train/validation split (ratio r_train_val): fit held-out donors' pre-periods
// from the training donors and keep the grid value with the smallest mean
// validation error, breaking ties toward stronger regularization.
double tune_si_hyperparams(const Eigen::MatrixXd& donors, const SiParams& params,
                           RngStream& rng);

}  // namespace tadsie::si

#include "tadsie/synthetic_intervention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tadsie/errors.hpp"

namespace tadsie::si {

SiParams SiParams::resolved(Eigen::Index baseline_index) const {
  SiParams out = *this;
  if (out.pre_period_end == 0) out.pre_period_end = baseline_index + 1;
  return out;
}

void SiParams::validate(Eigen::Index visits) const {
  if (!(r_train_val > 0.0))
    throw ValidationError("si params: r_train_val must be positive");
  if (ridge_grid.empty())
    throw ValidationError("si params: ridge_grid must be nonempty");
  for (double g : ridge_grid)
    if (!(g >= 0.0)) throw ValidationError("si params: ridge_grid entries must be >= 0");
  if (!(pre_period_end >= 1 && pre_period_end < visits))
    throw ValidationError("si params: require 1 <= pre_period_end < visits");
}

NormalizationState donor_normalization(const Eigen::MatrixXd& donors) {
  if (donors.rows() == 0)
    throw InsufficientDonorsError("normalization needs at least one donor");
  NormalizationState norm;
  norm.mean = donors.colwise().mean();
  const auto n = donors.rows();
  norm.scale.resize(donors.cols());
  for (Eigen::Index c = 0; c < donors.cols(); ++c) {
    double sd = 0.0;
    if (n > 1) {
      const double ss = (donors.col(c).array() - norm.mean[c]).square().sum();
      sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
    norm.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return norm;
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& rows,
                               const NormalizationState& norm) {
  return (rows.rowwise() - norm.mean.transpose()).array().rowwise() /
         norm.scale.transpose().array();
}

Eigen::MatrixXd unnormalize_rows(const Eigen::MatrixXd& rows,
                                 const NormalizationState& norm) {
  return (rows.array().rowwise() * norm.scale.transpose().array()).matrix()
             .rowwise() +
         norm.mean.transpose();
}

Eigen::MatrixXd ridge_weights(const Eigen::MatrixXd& donors_pre,
                              const Eigen::MatrixXd& targets_pre,
                              double regularization) {
  const Eigen::MatrixXd gram =
      donors_pre.transpose() * donors_pre;  // P x P
  Eigen::MatrixXd solved;                   // (gram + reg I)^-1 targets^T
  if (regularization > 0.0) {
    Eigen::MatrixXd system = gram;
    system.diagonal().array() += regularization;
    solved = system.ldlt().solve(targets_pre.transpose());
  } else {
    // Minimum-norm solution through the eigendecomposition of the Gram
    // matrix, dropping numerically-zero directions.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd& vals = eig.eigenvalues();
    const double tol = vals.size() > 0
                           ? std::max(vals.maxCoeff(), 0.0) * 1e-12 *
                                 static_cast<double>(vals.size())
                           : 0.0;
    Eigen::VectorXd inv = vals;
    for (Eigen::Index i = 0; i < inv.size(); ++i)
      inv[i] = vals[i] > tol ? 1.0 / vals[i] : 0.0;
    solved = eig.eigenvectors() * inv.asDiagonal() *
             eig.eigenvectors().transpose() * targets_pre.transpose();
  }
  return donors_pre * solved;  // n_donors x n_targets
}

Eigen::MatrixXd predict_counterfactuals(const Eigen::MatrixXd& donors,
                                        const Eigen::MatrixXd& targets,
                                        double regularization,
                                        const SiParams& params) {
  if (donors.rows() == 0)
    throw InsufficientDonorsError("predict_counterfactuals: no donors");
  params.validate(donors.cols());
  if (targets.cols() != donors.cols())
    throw ValidationError("targets and donors must share the visit count");

  const NormalizationState norm = donor_normalization(donors);
  const Eigen::MatrixXd donors_n = normalize_rows(donors, norm);
  const Eigen::MatrixXd targets_n = normalize_rows(targets, norm);
  const Eigen::Index pre = params.pre_period_end;

  const Eigen::MatrixXd weights = ridge_weights(
      donors_n.leftCols(pre), targets_n.leftCols(pre), regularization);
  const Eigen::MatrixXd cf_normalized = weights.transpose() * donors_n;
  return unnormalize_rows(cf_normalized, norm);
}

CounterfactualResult predict_counterfactual(const Eigen::MatrixXd& donors,
                                            const Eigen::VectorXd& target,
                                            double regularization,
                                            const SiParams& params) {
  if (donors.rows() == 0)
    throw InsufficientDonorsError("predict_counterfactual: no donors");
  params.validate(donors.cols());
  if (target.size() != donors.cols())
    throw ValidationError("target and donors must share the visit count");

  const NormalizationState norm = donor_normalization(donors);
  const Eigen::MatrixXd donors_n = normalize_rows(donors, norm);
  const Eigen::MatrixXd target_n = normalize_rows(target.transpose(), norm);
  const Eigen::Index pre = params.pre_period_end;

  CounterfactualResult result;
  result.weights = ridge_weights(donors_n.leftCols(pre),
                                 target_n.leftCols(pre), regularization);
  const Eigen::MatrixXd cf_normalized = result.weights.transpose() * donors_n;
  result.trajectory = unnormalize_rows(cf_normalized, norm).row(0);
  return result;
}

double tune_si_hyperparams(const Eigen::MatrixXd& donors, const SiParams& params,
                           RngStream& rng) {
  const Eigen::Index n = donors.rows();
  if (n < 3)
    throw InsufficientDonorsError("tune_si_hyperparams: need at least 3 donors");
  params.validate(donors.cols());

  // Donor-level split: shuffle, then train fraction r/(1+r).
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_index(i + 1)]);
  const double train_frac = params.r_train_val / (1.0 + params.r_train_val);
  const auto n_train = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::lround(train_frac * static_cast<double>(n))),
      1, n - 1);

  const Eigen::Index pre = params.pre_period_end;
  Eigen::MatrixXd train(n_train, donors.cols());
  Eigen::MatrixXd val(n - n_train, donors.cols());
  for (Eigen::Index i = 0; i < n_train; ++i) train.row(i) = donors.row(order[i]);
  for (Eigen::Index i = n_train; i < n; ++i)
    val.row(i - n_train) = donors.row(order[i]);

  const NormalizationState norm = donor_normalization(train);
  const Eigen::MatrixXd train_pre = normalize_rows(train, norm).leftCols(pre);
  const Eigen::MatrixXd val_pre = normalize_rows(val, norm).leftCols(pre);

  double best_reg = params.ridge_grid.front();
  double best_err = std::numeric_limits<double>::infinity();
  std::vector<double> grid = params.ridge_grid;
  std::sort(grid.begin(), grid.end());
  for (double reg : grid) {
    const Eigen::MatrixXd w = ridge_weights(train_pre, val_pre, reg);
    const double err =
        (w.transpose() * train_pre - val_pre).squaredNorm() /
        static_cast<double>(val_pre.rows());
    if (err <= best_err) {  // ties go to the larger (later) grid value
      best_err = err;
      best_reg = reg;
    }
  }
  return best_reg;
}

}  // namespace tadsie::si

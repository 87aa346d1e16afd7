#include "tadsie/secrets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tadsie/errors.hpp"

namespace tadsie::secrets {

void TestingParams::validate() const {
  if (!(alpha_target > 0.0 && alpha_target < 1.0))
    throw ValidationError("testing params: alpha_target must lie in (0,1)");
  if (!(t_lower < t_upper))
    throw ValidationError("testing params: t_lower must be below t_upper");
  if (!(t_lower > 0.0))
    throw ValidationError("testing params: t_lower must be positive");
  if (!(t_limit_exp > 1.0))
    throw ValidationError("testing params: t_limit_exp must exceed 1");
  if (n_s < 2) throw ValidationError("testing params: n_s must be >= 2");
  if (!(delta_alpha > 0.0))
    throw ValidationError("testing params: delta_alpha must be positive");
  if (max_rounds < 1)
    throw ValidationError("testing params: max_rounds must be >= 1");
}

Eigen::VectorXd IteSet::pooled() const {
  Eigen::VectorXd out(control_ites.size() + treatment_ites.size());
  out << control_ites, treatment_ites;
  return out;
}

Eigen::MatrixXd trajectories_matrix(const std::vector<cohort::PatientRecord>& records) {
  if (records.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()),
                    records.front().trajectory.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = records[i].trajectory.transpose();
  return m;
}

Eigen::VectorXd estimate_ites(const std::vector<cohort::PatientRecord>& x_unexposed,
                              const std::vector<cohort::PatientRecord>& x_exposed,
                              const si::SiParams& si_params,
                              const cohort::OutcomeFn& outcome, RngStream& rng,
                              std::optional<double> regularization) {
  if (x_unexposed.empty() || x_exposed.empty())
    throw InsufficientDataError("estimate_ites: both groups must be nonempty");
  const Eigen::MatrixXd donors = trajectories_matrix(x_exposed);
  const Eigen::MatrixXd targets = trajectories_matrix(x_unexposed);
  const double reg = regularization.has_value()
                         ? *regularization
                         : si::tune_si_hyperparams(donors, si_params, rng);
  const Eigen::MatrixXd counterfactuals =
      si::predict_counterfactuals(donors, targets, reg, si_params);

  Eigen::VectorXd ites(targets.rows());
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    const Eigen::VectorXd cf = counterfactuals.row(i);
    const Eigen::VectorXd obs = targets.row(i);
    ites[i] = outcome(cf) - outcome(obs);
  }
  return ites;
}

SiRegularization tune_directions(const std::vector<cohort::PatientRecord>& x_ctrl,
                                 const std::vector<cohort::PatientRecord>& x_treat,
                                 const si::SiParams& si_params, RngStream& rng) {
  SiRegularization regs;
  regs.donors_treatment =
      si::tune_si_hyperparams(trajectories_matrix(x_treat), si_params, rng);
  regs.donors_control =
      si::tune_si_hyperparams(trajectories_matrix(x_ctrl), si_params, rng);
  return regs;
}

IteSet estimate_ite_set(const std::vector<cohort::PatientRecord>& x_ctrl,
                        const std::vector<cohort::PatientRecord>& x_treat,
                        const si::SiParams& si_params,
                        const cohort::OutcomeFn& outcome, RngStream& rng,
                        const SiRegularization* fixed_regularization) {
  std::optional<double> reg_treat, reg_ctrl;
  if (fixed_regularization != nullptr) {
    reg_treat = fixed_regularization->donors_treatment;
    reg_ctrl = fixed_regularization->donors_control;
  }
  IteSet set;
  // Control subjects: counterfactual under treatment minus observed, already
  // treatment-minus-control.
  set.control_ites =
      estimate_ites(x_ctrl, x_treat, si_params, outcome, rng, reg_treat);
  // Treatment subjects: counterfactual under control minus observed comes out
  // control-minus-treatment, so flip the sign before pooling.
  set.treatment_ites =
      -estimate_ites(x_treat, x_ctrl, si_params, outcome, rng, reg_ctrl);
  return set;
}

double test_statistic(Eigen::Ref<const Eigen::VectorXd> pooled_ites) {
  const auto [mean, var] = stats::sample_stats(pooled_ites);
  if (!(var > 0.0))
    throw DegenerateStatisticError("test_statistic: zero sample variance");
  return mean / std::sqrt(var / static_cast<double>(pooled_ites.size()));
}

Eigen::VectorXd sample_null(const std::vector<cohort::PatientRecord>& x_ctrl,
                            int t_samples, const si::SiParams& si_params,
                            const cohort::OutcomeFn& outcome, RngStream& rng) {
  if (x_ctrl.empty())
    throw InsufficientDataError("sample_null: control arm is empty");
  if (t_samples < 2)
    throw ValidationError("sample_null: need at least 2 null samples");

  const std::size_t n = x_ctrl.size();
  Eigen::VectorXd samples(t_samples);
  for (int i = 0; i < t_samples; ++i) {
    RngStream iter_rng = rng.derive(static_cast<std::uint64_t>(i));
    for (int attempt = 0;; ++attempt) {
      const auto pseudo_ctrl = stats::bootstrap_resample(x_ctrl, n, iter_rng);
      const auto pseudo_treat = stats::bootstrap_resample(x_ctrl, n, iter_rng);
      try {
        const IteSet set = estimate_ite_set(pseudo_ctrl, pseudo_treat, si_params,
                                            outcome, iter_rng);
        samples[i] = test_statistic(set.pooled());
        break;
      } catch (const DegenerateStatisticError&) {
        if (attempt >= 1) throw;
      }
    }
  }
  return samples;
}

CriticalValueResult tune_critical_value(Eigen::Ref<const Eigen::VectorXd> null_samples,
                                        const TestingParams& params) {
  params.validate();
  if (null_samples.size() < 10)
    throw InsufficientDataError("tune_critical_value: need at least 10 null samples");

  std::vector<double> abs_sorted(static_cast<std::size_t>(null_samples.size()));
  for (Eigen::Index i = 0; i < null_samples.size(); ++i)
    abs_sorted[static_cast<std::size_t>(i)] = std::abs(null_samples[i]);
  std::sort(abs_sorted.begin(), abs_sorted.end());
  const double n = static_cast<double>(abs_sorted.size());
  // Empirical significance: strict |s| > c, ties count as non-rejection.
  auto empirical_alpha = [&](double c) {
    const auto above =
        abs_sorted.end() -
        std::upper_bound(abs_sorted.begin(), abs_sorted.end(), c);
    return static_cast<double>(above) / n;
  };

  CriticalValueResult best;
  double best_err = std::numeric_limits<double>::infinity();
  double lo = params.t_lower;
  double hi = params.t_upper;
  for (int round = 0; round < params.max_rounds; ++round) {
    std::vector<double> candidates(static_cast<std::size_t>(params.n_s));
    for (int k = 0; k < params.n_s; ++k)
      candidates[static_cast<std::size_t>(k)] =
          lo + (hi - lo) * static_cast<double>(k) /
                   static_cast<double>(params.n_s - 1);

    double round_min = 1.0, round_max = 0.0;
    int round_best = 0;
    double round_best_err = std::numeric_limits<double>::infinity();
    for (int k = 0; k < params.n_s; ++k) {
      const double c = candidates[static_cast<std::size_t>(k)];
      const double a = empirical_alpha(c);
      const double err = std::abs(a - params.alpha_target);
      round_min = std::min(round_min, a);
      round_max = std::max(round_max, a);
      if (err < round_best_err) {
        round_best_err = err;
        round_best = k;
      }
      if (err < best_err || (err == best_err && c < best.value)) {
        best_err = err;
        best.value = c;
        best.achieved_alpha = a;
      }
    }
    if (best_err <= params.delta_alpha) {
      best.converged = true;
      return best;
    }
    if (round_min > params.alpha_target) {
      hi *= params.t_limit_exp;  // even the widest candidate rejects too often
    } else if (round_max < params.alpha_target) {
      lo /= params.t_limit_exp;  // even the narrowest candidate rejects too rarely
    } else {
      const int lo_idx = std::max(round_best - 1, 0);
      const int hi_idx = std::min(round_best + 1, params.n_s - 1);
      lo = candidates[static_cast<std::size_t>(lo_idx)];
      hi = candidates[static_cast<std::size_t>(hi_idx)];
    }
  }
  best.converged = false;
  return best;
}

stats::TestDecision run_secrets(const std::vector<cohort::PatientRecord>& x_ctrl,
                                const std::vector<cohort::PatientRecord>& x_treat,
                                const si::SiParams& si_params,
                                const TestingParams& testing, int t_samples,
                                const cohort::OutcomeFn& outcome, RngStream& rng) {
  if (x_ctrl.size() < 2 || x_treat.size() < 2)
    throw InsufficientDataError("run_secrets: each arm needs >= 2 subjects");
  const IteSet set = estimate_ite_set(x_ctrl, x_treat, si_params, outcome, rng);
  const double statistic = test_statistic(set.pooled());
  const Eigen::VectorXd nulls =
      sample_null(x_ctrl, t_samples, si_params, outcome, rng);
  const CriticalValueResult cv = tune_critical_value(nulls, testing);

  stats::TestDecision decision;
  decision.statistic = statistic;
  decision.critical_value = cv.value;
  decision.reject = std::abs(statistic) > cv.value;
  return decision;
}

stats::TestDecision run_secrets(const cohort::RctDataset& dataset,
                                const si::SiParams& si_params,
                                const TestingParams& testing, int t_samples,
                                RngStream& rng) {
  const si::SiParams resolved = si_params.resolved(dataset.baseline_index);
  const auto outcome =
      cohort::change_score_outcome(dataset.baseline_index, dataset.endpoint_index);
  return run_secrets(dataset.control, dataset.treatment, resolved, testing,
                     t_samples, outcome, rng);
}

}  // namespace tadsie::secrets

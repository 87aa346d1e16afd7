#include "tadsie/harness.hpp"

#include <atomic>
#include <cmath>
#include <memory>
#include <ostream>
#include <thread>

#include "tadsie/errors.hpp"

namespace tadsie::harness {

namespace {

bool performed_increase(const tad::TrialResult& r) {
  for (const auto& entry : r.trace)
    if (entry.increase) return true;
  return false;
}

}  // namespace

EvaluationReport simulate_trials(const TrialRunner& runner,
                                 const std::string& method_name,
                                 const cohort::RctDataset& original,
                                 cohort::Hypothesis hypothesis, int n_trials,
                                 std::uint64_t seed, int workers) {
  if (n_trials < 1)
    throw ValidationError("simulate_trials: n_trials must be >= 1");
  original.validate();

  // Per-trial streams are derived up front in index order, so execution
  // order (and worker count) cannot change any trial's randomness.
  RngStream root(seed);
  std::vector<RngStream> streams;
  streams.reserve(static_cast<std::size_t>(n_trials));
  for (int i = 0; i < n_trials; ++i)
    streams.push_back(root.derive(static_cast<std::uint64_t>(i)));

  std::vector<tad::TrialResult> results(static_cast<std::size_t>(n_trials));
  std::vector<std::string> failures(static_cast<std::size_t>(n_trials));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_trials) return;
      try {
        cohort::PoolSource source(original, hypothesis);
        RngStream trial_rng = streams[static_cast<std::size_t>(i)];
        results[static_cast<std::size_t>(i)] = runner(source, trial_rng);
      } catch (const std::exception& e) {
        failures[static_cast<std::size_t>(i)] = e.what();
      }
    }
  };

  const int n_workers = std::max(1, std::min(workers, n_trials));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (int i = 0; i < n_trials; ++i) {
    if (!failures[static_cast<std::size_t>(i)].empty())
      throw Error("trial " + std::to_string(i) + " failed: " +
                  failures[static_cast<std::size_t>(i)]);
  }

  EvaluationReport report;
  report.method = method_name;
  report.hypothesis = hypothesis;
  report.n_trials = n_trials;
  report.seed = seed;
  std::vector<double> arm_sizes, iterations;
  arm_sizes.reserve(results.size());
  iterations.reserve(results.size());
  int rejects = 0, futile = 0, increased = 0;
  for (const auto& r : results) {
    rejects += r.decision == tad::Decision::reject ? 1 : 0;
    futile += r.futility_stopped ? 1 : 0;
    increased += performed_increase(r) ? 1 : 0;
    arm_sizes.push_back(static_cast<double>(r.final_arm_size));
    iterations.push_back(static_cast<double>(r.iterations));
  }
  const double n = static_cast<double>(n_trials);
  report.rejection_rate = static_cast<double>(rejects) / n;
  report.rejection_rate_se =
      std::sqrt(report.rejection_rate * (1.0 - report.rejection_rate) / n);
  report.futility_rate = static_cast<double>(futile) / n;
  report.increase_rate = static_cast<double>(increased) / n;
  report.arm_size_summary = stats::box_summary(arm_sizes);
  report.iterations_summary = stats::box_summary(iterations);
  return report;
}

SweepReport sweep(const tad::TadConfig& base, const cohort::RctDataset& original,
                  const std::vector<double>& scale_factors,
                  const std::vector<double>& boundaries, int n_trials,
                  std::uint64_t seed, int workers) {
  if (scale_factors.empty() || boundaries.empty())
    throw ValidationError("sweep: both grids must be nonempty");
  SweepReport report;
  report.power_target = base.power_target;
  report.alpha_target = base.alpha_target;
  report.n_trials = n_trials;
  report.seed = seed;
  for (double scale : scale_factors) {
    for (double boundary : boundaries) {
      tad::TadConfig config = base;
      config.step_size_scale_factor = scale;
      config.futility_power_boundary = boundary;
      config.validate();
      TrialRunner runner = [config](cohort::SubjectSource& source,
                                    RngStream& rng) {
        return tad::run_tad_sie(config, source, rng);
      };
      SweepCell cell;
      cell.step_size_scale_factor = scale;
      cell.futility_power_boundary = boundary;
      cell.h0 = simulate_trials(runner, "tad_sie", original,
                                cohort::Hypothesis::h0, n_trials, seed, workers);
      cell.h1 = simulate_trials(runner, "tad_sie", original,
                                cohort::Hypothesis::h1, n_trials, seed, workers);
      cell.feasible = cell.h1.rejection_rate >= base.power_target - 0.01 &&
                      cell.h0.rejection_rate <= base.alpha_target + 0.01;
      report.cells.push_back(cell);
    }
  }
  return report;
}

nlohmann::json to_json(const stats::BoxSummary& s) {
  return {{"median", s.median},
          {"q1", s.q1},
          {"q3", s.q3},
          {"whisker_low", s.whisker_low},
          {"whisker_high", s.whisker_high},
          {"n_outliers", s.n_outliers}};
}

nlohmann::json to_json(const stats::TestDecision& d) {
  return {{"reject", d.reject},
          {"statistic", d.statistic},
          {"critical_value", d.critical_value}};
}

nlohmann::json to_json(const tad::IterationTrace& t) {
  nlohmann::json j{{"iteration", t.iteration},
                   {"n_step", t.n_step},
                   {"n_curr", t.n_curr},
                   {"t", t.t},
                   {"ate", t.ate},
                   {"variance", t.variance},
                   {"futility", t.futility},
                   {"increase", t.increase}};
  j["cp"] = t.cp.has_value() ? nlohmann::json(*t.cp) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const tad::TrialResult& r) {
  nlohmann::json j{{"method", r.method},
                   {"decision", tad::decision_label(r.decision)},
                   {"futility_stopped", r.futility_stopped},
                   {"final_arm_size", r.final_arm_size},
                   {"iterations", r.iterations}};
  j["trace"] = nlohmann::json::array();
  for (const auto& t : r.trace) j["trace"].push_back(to_json(t));
  j["test"] = r.test.has_value() ? to_json(*r.test) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const EvaluationReport& r) {
  return {{"method", r.method},
          {"hypothesis", cohort::hypothesis_label(r.hypothesis)},
          {"n_trials", r.n_trials},
          {"rejection_rate", r.rejection_rate},
          {"rejection_rate_se", r.rejection_rate_se},
          {"futility_rate", r.futility_rate},
          {"increase_rate", r.increase_rate},
          {"arm_size_summary", to_json(r.arm_size_summary)},
          {"iterations_summary", to_json(r.iterations_summary)},
          {"seed", r.seed}};
}

nlohmann::json to_json(const SweepReport& r) {
  nlohmann::json j{{"power_target", r.power_target},
                   {"alpha_target", r.alpha_target},
                   {"n_trials", r.n_trials},
                   {"seed", r.seed}};
  j["cells"] = nlohmann::json::array();
  for (const auto& cell : r.cells) {
    j["cells"].push_back({{"step_size_scale_factor", cell.step_size_scale_factor},
                          {"futility_power_boundary", cell.futility_power_boundary},
                          {"feasible", cell.feasible},
                          {"h0", to_json(cell.h0)},
                          {"h1", to_json(cell.h1)}});
  }
  return j;
}

namespace {

stats::BoxSummary box_from_json(const nlohmann::json& j) {
  stats::BoxSummary s;
  s.median = j.at("median").get<double>();
  s.q1 = j.at("q1").get<double>();
  s.q3 = j.at("q3").get<double>();
  s.whisker_low = j.at("whisker_low").get<double>();
  s.whisker_high = j.at("whisker_high").get<double>();
  s.n_outliers = j.at("n_outliers").get<std::size_t>();
  return s;
}

}  // namespace

EvaluationReport evaluation_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  r.method = j.at("method").get<std::string>();
  r.hypothesis = j.at("hypothesis").get<std::string>() == "H0"
                     ? cohort::Hypothesis::h0
                     : cohort::Hypothesis::h1;
  r.n_trials = j.at("n_trials").get<int>();
  r.rejection_rate = j.at("rejection_rate").get<double>();
  r.rejection_rate_se = j.at("rejection_rate_se").get<double>();
  r.futility_rate = j.at("futility_rate").get<double>();
  r.increase_rate = j.at("increase_rate").get<double>();
  r.arm_size_summary = box_from_json(j.at("arm_size_summary"));
  r.iterations_summary = box_from_json(j.at("iterations_summary"));
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

SweepReport sweep_from_json(const nlohmann::json& j) {
  SweepReport r;
  r.power_target = j.at("power_target").get<double>();
  r.alpha_target = j.at("alpha_target").get<double>();
  r.n_trials = j.at("n_trials").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& c : j.at("cells")) {
    SweepCell cell;
    cell.step_size_scale_factor = c.at("step_size_scale_factor").get<double>();
    cell.futility_power_boundary = c.at("futility_power_boundary").get<double>();
    cell.feasible = c.at("feasible").get<bool>();
    cell.h0 = evaluation_from_json(c.at("h0"));
    cell.h1 = evaluation_from_json(c.at("h1"));
    r.cells.push_back(cell);
  }
  return r;
}

namespace {

void write_csv_header(std::ostream& out, bool sweep_columns) {
  out << "method,hypothesis";
  if (sweep_columns) out << ",step_size_scale_factor,futility_power_boundary,feasible";
  out << ",n_trials,seed,rejection_rate,rejection_rate_se,futility_rate,"
         "increase_rate";
  for (const char* prefix : {"arm_size", "iterations"})
    out << "," << prefix << "_median," << prefix << "_q1," << prefix << "_q3,"
        << prefix << "_whisker_low," << prefix << "_whisker_high," << prefix
        << "_n_outliers";
  out << "\n";
}

void write_box_cells(std::ostream& out, const stats::BoxSummary& s) {
  out << "," << s.median << "," << s.q1 << "," << s.q3 << "," << s.whisker_low
      << "," << s.whisker_high << "," << s.n_outliers;
}

void write_report_cells(std::ostream& out, const EvaluationReport& r) {
  out << "," << r.n_trials << "," << r.seed << "," << r.rejection_rate << ","
      << r.rejection_rate_se << "," << r.futility_rate << "," << r.increase_rate;
  write_box_cells(out, r.arm_size_summary);
  write_box_cells(out, r.iterations_summary);
  out << "\n";
}

}  // namespace

void write_evaluation_csv(const std::vector<EvaluationReport>& reports,
                          std::ostream& out) {
  out.precision(17);
  write_csv_header(out, false);
  for (const auto& r : reports) {
    out << r.method << "," << cohort::hypothesis_label(r.hypothesis);
    write_report_cells(out, r);
  }
}

void write_sweep_csv(const SweepReport& report, std::ostream& out) {
  out.precision(17);
  write_csv_header(out, true);
  for (const auto& cell : report.cells) {
    for (const EvaluationReport* r : {&cell.h0, &cell.h1}) {
      out << r->method << "," << cohort::hypothesis_label(r->hypothesis) << ","
          << cell.step_size_scale_factor << "," << cell.futility_power_boundary
          << "," << (cell.feasible ? "true" : "false");
      write_report_cells(out, *r);
    }
  }
}

}  // namespace tadsie::harness

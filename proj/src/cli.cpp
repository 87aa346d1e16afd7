#include "tadsie/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tadsie/baselines.hpp"
#include "tadsie/cohort.hpp"
#include "tadsie/errors.hpp"
#include "tadsie/harness.hpp"
#include "tadsie/moments.hpp"
#include "tadsie/secrets.hpp"
#include "tadsie/tad.hpp"

namespace tadsie::cli {

namespace {

using nlohmann::json;

// Structural derivation keys, outside the per-trial index range.
constexpr std::uint64_t kCohortKey = 0x636f686f7274ULL;
constexpr std::uint64_t kCurvesKey = 0x637572766573ULL;
constexpr std::uint64_t kTrialKey = 0x747269616cULL;

const std::vector<std::string> kDesigns = {
    "tad_sie",      "tad_sie_se",       "tad_sie_te",       "fixed",
    "standard_tad", "standard_tad_sie", "tad_standard_test"};

struct RunConfig {
  std::string design = "tad_sie";
  tad::TadConfig tad;
  baselines::BaselineConfig baseline;
  cohort::CohortGenConfig cohort_gen;
  std::string dataset_path;  // empty -> synthetic cohort
  Eigen::Index n_control = 100;
  Eigen::Index n_treatment = 100;
  std::string hypothesis = "h1";
  int n_trials = 100;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

json si_to_json(const si::SiParams& p) {
  return {{"r_train_val", p.r_train_val},
          {"ridge_grid", p.ridge_grid},
          {"pre_period_end", p.pre_period_end}};
}

json testing_to_json(const secrets::TestingParams& p) {
  return {{"alpha_target", p.alpha_target}, {"t_lower", p.t_lower},
          {"t_upper", p.t_upper},           {"t_limit_exp", p.t_limit_exp},
          {"n_s", p.n_s},                   {"delta_alpha", p.delta_alpha},
          {"max_rounds", p.max_rounds}};
}

json tad_to_json(const tad::TadConfig& c) {
  return {{"n_pilot", c.n_pilot},
          {"alpha_target", c.alpha_target},
          {"power_target", c.power_target},
          {"n_max", c.n_max},
          {"step_size_scale_factor", c.step_size_scale_factor},
          {"futility_power_boundary", c.futility_power_boundary},
          {"b_replicates", c.b_replicates},
          {"t_samples", c.t_samples},
          {"moment_method", moments::moment_method_label(c.moment_method)},
          {"cp_moment_method", moments::moment_method_label(c.cp_moment_method)},
          {"retune_per_replicate", c.retune_per_replicate},
          {"si", si_to_json(c.si)},
          {"testing", testing_to_json(c.testing)}};
}

json baseline_to_json(const baselines::BaselineConfig& c) {
  return {{"n_pilot", c.n_pilot},
          {"alpha_target", c.alpha_target},
          {"power_target", c.power_target},
          {"n_max", c.n_max},
          {"interim_information_fraction", c.interim_information_fraction},
          {"cp_promising_threshold", c.cp_promising_threshold},
          {"b_replicates", c.b_replicates},
          {"t_samples", c.t_samples},
          {"retune_per_replicate", c.retune_per_replicate},
          {"si", si_to_json(c.si)},
          {"testing", testing_to_json(c.testing)}};
}

json cohort_gen_to_json(const cohort::CohortGenConfig& c) {
  return {{"visits", c.visits},
          {"baseline_index", c.baseline_index},
          {"endpoint_index", c.endpoint_index},
          {"baseline_mean", c.baseline_mean},
          {"baseline_sd", c.baseline_sd},
          {"control_drift", c.control_drift},
          {"treatment_effect_mean", c.treatment_effect_mean},
          {"treatment_effect_sd", c.treatment_effect_sd},
          {"noise_sd", c.noise_sd},
          {"latent_factor_count", c.latent_factor_count},
          {"latent_loading_sd", c.latent_loading_sd}};
}

bool uses_baseline_config(const std::string& design) {
  return design == "fixed" || design == "standard_tad" ||
         design == "standard_tad_sie";
}

// The resolved configuration echoed into every report.
json config_to_json(const RunConfig& rc) {
  json j{{"design", rc.design}, {"seed", rc.seed}};
  if (rc.dataset_path.empty()) {
    j["cohort"] = cohort_gen_to_json(rc.cohort_gen);
    j["n_control"] = rc.n_control;
    j["n_treatment"] = rc.n_treatment;
  } else {
    j["dataset"] = rc.dataset_path;
  }
  if (uses_baseline_config(rc.design))
    j["baseline"] = baseline_to_json(rc.baseline);
  else
    j["tad"] = tad_to_json(rc.tad);
  return j;
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void si_from_json(const json& j, si::SiParams& p) {
  maybe(j, "r_train_val", p.r_train_val);
  maybe(j, "ridge_grid", p.ridge_grid);
  long ppe = p.pre_period_end;
  maybe(j, "pre_period_end", ppe);
  p.pre_period_end = ppe;
}

void testing_from_json(const json& j, secrets::TestingParams& p) {
  maybe(j, "alpha_target", p.alpha_target);
  maybe(j, "t_lower", p.t_lower);
  maybe(j, "t_upper", p.t_upper);
  maybe(j, "t_limit_exp", p.t_limit_exp);
  maybe(j, "n_s", p.n_s);
  maybe(j, "delta_alpha", p.delta_alpha);
  maybe(j, "max_rounds", p.max_rounds);
}

void tad_from_json(const json& j, tad::TadConfig& c) {
  long v = 0;
  if (j.contains("n_pilot")) { v = j.at("n_pilot").get<long>(); c.n_pilot = v; }
  maybe(j, "alpha_target", c.alpha_target);
  maybe(j, "power_target", c.power_target);
  if (j.contains("n_max")) { v = j.at("n_max").get<long>(); c.n_max = v; }
  maybe(j, "step_size_scale_factor", c.step_size_scale_factor);
  maybe(j, "futility_power_boundary", c.futility_power_boundary);
  maybe(j, "b_replicates", c.b_replicates);
  maybe(j, "t_samples", c.t_samples);
  if (j.contains("moment_method"))
    c.moment_method =
        moments::parse_moment_method(j.at("moment_method").get<std::string>());
  if (j.contains("cp_moment_method"))
    c.cp_moment_method = moments::parse_moment_method(
        j.at("cp_moment_method").get<std::string>());
  maybe(j, "retune_per_replicate", c.retune_per_replicate);
  if (j.contains("si")) si_from_json(j.at("si"), c.si);
  if (j.contains("testing")) testing_from_json(j.at("testing"), c.testing);
}

void baseline_from_json(const json& j, baselines::BaselineConfig& c) {
  long v = 0;
  if (j.contains("n_pilot")) { v = j.at("n_pilot").get<long>(); c.n_pilot = v; }
  maybe(j, "alpha_target", c.alpha_target);
  maybe(j, "power_target", c.power_target);
  if (j.contains("n_max")) { v = j.at("n_max").get<long>(); c.n_max = v; }
  maybe(j, "interim_information_fraction", c.interim_information_fraction);
  maybe(j, "cp_promising_threshold", c.cp_promising_threshold);
  maybe(j, "b_replicates", c.b_replicates);
  maybe(j, "t_samples", c.t_samples);
  maybe(j, "retune_per_replicate", c.retune_per_replicate);
  if (j.contains("si")) si_from_json(j.at("si"), c.si);
  if (j.contains("testing")) testing_from_json(j.at("testing"), c.testing);
}

void cohort_gen_from_json(const json& j, cohort::CohortGenConfig& c) {
  long v = 0;
  if (j.contains("visits")) { v = j.at("visits").get<long>(); c.visits = v; }
  if (j.contains("baseline_index")) {
    v = j.at("baseline_index").get<long>();
    c.baseline_index = v;
  }
  if (j.contains("endpoint_index")) {
    v = j.at("endpoint_index").get<long>();
    c.endpoint_index = v;
  }
  maybe(j, "baseline_mean", c.baseline_mean);
  maybe(j, "baseline_sd", c.baseline_sd);
  maybe(j, "control_drift", c.control_drift);
  maybe(j, "treatment_effect_mean", c.treatment_effect_mean);
  maybe(j, "treatment_effect_sd", c.treatment_effect_sd);
  maybe(j, "noise_sd", c.noise_sd);
  if (j.contains("latent_factor_count")) {
    v = j.at("latent_factor_count").get<long>();
    c.latent_factor_count = v;
  }
  maybe(j, "latent_loading_sd", c.latent_loading_sd);
}

void config_from_json(const json& j, RunConfig& rc) {
  maybe(j, "design", rc.design);
  maybe(j, "dataset", rc.dataset_path);
  long v = 0;
  if (j.contains("n_control")) { v = j.at("n_control").get<long>(); rc.n_control = v; }
  if (j.contains("n_treatment")) {
    v = j.at("n_treatment").get<long>();
    rc.n_treatment = v;
  }
  maybe(j, "hypothesis", rc.hypothesis);
  maybe(j, "n_trials", rc.n_trials);
  if (j.contains("seed")) {
    rc.seed = j.at("seed").get<std::uint64_t>();
    rc.seed_given = true;
  }
  if (j.contains("cohort")) cohort_gen_from_json(j.at("cohort"), rc.cohort_gen);
  if (j.contains("tad")) tad_from_json(j.at("tad"), rc.tad);
  if (j.contains("baseline")) baseline_from_json(j.at("baseline"), rc.baseline);
}

int default_workers() {
  if (const char* env = std::getenv("TADSIE_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void finalize_seed(RunConfig& rc) {
  if (!rc.seed_given) {
    std::random_device rd;
    rc.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cerr << "seed not given; using " << rc.seed << "\n";
  }
}

// Presets resolve before explicit flags are re-applied, so flags still win.
void apply_design_presets(RunConfig& rc, bool scale_set, bool boundary_set) {
  if (rc.design == "tad_sie_se" && !scale_set)
    rc.tad.step_size_scale_factor = 0.1;
  if (rc.design == "tad_sie_te" && !scale_set)
    rc.tad.step_size_scale_factor = 0.6;
  if ((rc.design == "tad_sie_se" || rc.design == "tad_sie_te") && !boundary_set)
    rc.tad.futility_power_boundary = rc.tad.power_target >= 0.9 ? 0.01 : 0.11;
}

// Baselines share the trial-level knobs with the engine configuration.
void sync_baseline(RunConfig& rc) {
  rc.baseline.n_pilot = rc.tad.n_pilot;
  rc.baseline.alpha_target = rc.tad.alpha_target;
  rc.baseline.power_target = rc.tad.power_target;
  rc.baseline.n_max = rc.tad.n_max;
  rc.baseline.b_replicates = rc.tad.b_replicates;
  rc.baseline.t_samples = rc.tad.t_samples;
  rc.baseline.si = rc.tad.si;
  rc.baseline.testing = rc.tad.testing;
  rc.baseline.retune_per_replicate = rc.tad.retune_per_replicate;
}

harness::TrialRunner make_runner(const RunConfig& rc) {
  const std::string& d = rc.design;
  if (d == "tad_sie" || d == "tad_sie_se" || d == "tad_sie_te") {
    tad::TadConfig c = rc.tad;
    return [c](cohort::SubjectSource& s, RngStream& r) {
      return tad::run_tad_sie(c, s, r);
    };
  }
  if (d == "tad_standard_test") {
    tad::TadConfig c = rc.tad;
    return [c](cohort::SubjectSource& s, RngStream& r) {
      return baselines::run_tad_standard_test(c, s, r);
    };
  }
  baselines::BaselineConfig c = rc.baseline;
  if (d == "fixed")
    return [c](cohort::SubjectSource& s, RngStream& r) {
      return baselines::run_fixed_sample_design(c, s, r);
    };
  if (d == "standard_tad")
    return [c](cohort::SubjectSource& s, RngStream& r) {
      return baselines::run_standard_tad(c, s, r);
    };
  if (d == "standard_tad_sie")
    return [c](cohort::SubjectSource& s, RngStream& r) {
      return baselines::run_standard_tad_sie(c, s, r);
    };
  throw ConfigurationError("unknown design '" + d + "'");
}

cohort::RctDataset original_dataset(const RunConfig& rc) {
  if (!rc.dataset_path.empty()) return cohort::load_dataset(rc.dataset_path);
  RngStream root(rc.seed);
  RngStream cohort_rng = root.derive(kCohortKey);
  return cohort::generate_cohort(rc.cohort_gen, rc.n_control, rc.n_treatment,
                                 cohort_rng);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

// Attaches the trial-design and cohort flags shared by the run-trial,
// evaluate, and sweep subcommands.
struct DesignFlags {
  CLI::Option* scale = nullptr;
  CLI::Option* boundary = nullptr;
};

DesignFlags add_design_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--design", rc.design, "Trial design")
      ->check(CLI::IsMember(kDesigns))
      ->capture_default_str();
  cmd->add_option("--n-pilot", rc.tad.n_pilot, "Pilot arm size")
      ->capture_default_str();
  cmd->add_option("--alpha", rc.tad.alpha_target, "Target significance level")
      ->capture_default_str();
  cmd->add_option("--power", rc.tad.power_target, "Target power")
      ->capture_default_str();
  cmd->add_option("--n-max", rc.tad.n_max, "Maximum arm size")
      ->capture_default_str();
  DesignFlags flags;
  flags.scale = cmd->add_option("--scale-factor", rc.tad.step_size_scale_factor,
                                "Step size scale factor in (0,1]")
                    ->capture_default_str();
  flags.boundary =
      cmd->add_option("--boundary", rc.tad.futility_power_boundary,
                      "Futility power boundary (0 disables stopping)")
          ->capture_default_str();
  cmd->add_option("-B,--b-replicates", rc.tad.b_replicates,
                  "Bootstrap replicates for the ATE variance")
      ->capture_default_str();
  cmd->add_option("-T,--t-samples", rc.tad.t_samples,
                  "Null-distribution samples for critical-value tuning")
      ->capture_default_str();
  cmd->add_option("--moment-method", rc.tad.moment_method,
                  "Moment estimation: secrets|naive|two_sample")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, moments::MomentMethod>{
              {"secrets", moments::MomentMethod::secrets},
              {"naive", moments::MomentMethod::naive},
              {"two_sample", moments::MomentMethod::two_sample}}));
  cmd->add_option("--cp-moment-method", rc.tad.cp_moment_method,
                  "Moments behind the futility CP: secrets|naive")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, moments::MomentMethod>{
              {"secrets", moments::MomentMethod::secrets},
              {"naive", moments::MomentMethod::naive}}));
  cmd->add_flag("--retune-per-replicate", rc.tad.retune_per_replicate,
                "Retune SI inside every bootstrap replicate");
  cmd->add_option("--r-train-val", rc.tad.si.r_train_val,
                  "Donor train:validation ratio")
      ->capture_default_str();
  cmd->add_option("--ridge-grid", rc.tad.si.ridge_grid,
                  "Ridge strength candidates")
      ->delimiter(',');
  cmd->add_option("--pre-period-end", rc.tad.si.pre_period_end,
                  "Visits fitted by SI (0 = baseline_index + 1)")
      ->capture_default_str();
  cmd->add_option("--t-lower", rc.tad.testing.t_lower,
                  "Critical-value search lower bound")
      ->capture_default_str();
  cmd->add_option("--t-upper", rc.tad.testing.t_upper,
                  "Critical-value search upper bound")
      ->capture_default_str();
  cmd->add_option("--t-limit-exp", rc.tad.testing.t_limit_exp,
                  "Search range expansion factor")
      ->capture_default_str();
  cmd->add_option("--n-s", rc.tad.testing.n_s,
                  "Critical-value candidates per round")
      ->capture_default_str();
  cmd->add_option("--delta-alpha", rc.tad.testing.delta_alpha,
                  "Significance tolerance of the tuner")
      ->capture_default_str();
  cmd->add_option("--max-rounds", rc.tad.testing.max_rounds,
                  "Critical-value tuner round cap")
      ->capture_default_str();
  cmd->add_option("--interim-fraction",
                  rc.baseline.interim_information_fraction,
                  "Interim information fraction (promising-zone designs)")
      ->capture_default_str();
  cmd->add_option("--cp-threshold", rc.baseline.cp_promising_threshold,
                  "Promising-zone CP threshold")
      ->capture_default_str();
  return flags;
}

void add_cohort_options(CLI::App* cmd, cohort::CohortGenConfig& c) {
  cmd->add_option("--visits", c.visits, "Visits per trajectory")
      ->capture_default_str();
  cmd->add_option("--baseline-index", c.baseline_index, "Baseline visit index")
      ->capture_default_str();
  cmd->add_option("--endpoint-index", c.endpoint_index, "Endpoint visit index")
      ->capture_default_str();
  cmd->add_option("--baseline-mean", c.baseline_mean, "Mean baseline score")
      ->capture_default_str();
  cmd->add_option("--baseline-sd", c.baseline_sd, "Baseline score sd")
      ->capture_default_str();
  cmd->add_option("--drift", c.control_drift, "Per-visit control drift")
      ->capture_default_str();
  cmd->add_option("--effect-mean", c.treatment_effect_mean,
                  "Mean treatment effect (outcome units)")
      ->capture_default_str();
  cmd->add_option("--effect-sd", c.treatment_effect_sd,
                  "Per-subject effect sd")
      ->capture_default_str();
  cmd->add_option("--noise-sd", c.noise_sd, "Per-visit noise sd")
      ->capture_default_str();
  cmd->add_option("--latent-factors", c.latent_factor_count,
                  "Latent factor count")
      ->capture_default_str();
  cmd->add_option("--latent-loading-sd", c.latent_loading_sd,
                  "Latent loading sd")
      ->capture_default_str();
}

std::optional<std::string> config_path_from_args(
    const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) return args[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

int cmd_generate(const RunConfig& rc_in, const std::string& out_path) {
  RunConfig rc = rc_in;
  if (out_path.empty()) throw ConfigurationError("generate requires --out");
  RngStream root(rc.seed);
  RngStream cohort_rng = root.derive(kCohortKey);
  const auto ds = cohort::generate_cohort(rc.cohort_gen, rc.n_control,
                                          rc.n_treatment, cohort_rng);
  cohort::save_dataset(ds, out_path);
  std::cout << "wrote " << out_path << " (" << ds.control.size()
            << " control, " << ds.treatment.size() << " treatment)\n";
  return 0;
}

int cmd_run_trial(const RunConfig& rc, const std::string& out_path) {
  RngStream root(rc.seed);
  std::unique_ptr<cohort::SubjectSource> source;
  if (rc.dataset_path.empty()) {
    RngStream curve_rng = root.derive(kCurvesKey);
    source = std::make_unique<cohort::GeneratorSource>(rc.cohort_gen, curve_rng);
  } else {
    const auto ds = cohort::load_dataset(rc.dataset_path);
    const auto hyp = rc.hypothesis == "h0" ? cohort::Hypothesis::h0
                                           : cohort::Hypothesis::h1;
    source = std::make_unique<cohort::PoolSource>(ds, hyp);
  }
  RngStream trial_rng = root.derive(kTrialKey);
  const auto runner = make_runner(rc);
  const tad::TrialResult result = runner(*source, trial_rng);

  json out{{"config", config_to_json(rc)}, {"result", harness::to_json(result)}};
  write_text(out_path, out.dump(2) + "\n");
  return 0;
}

int cmd_evaluate(const RunConfig& rc, const std::string& out_path,
                 const std::string& csv_path, int workers) {
  const auto original = original_dataset(rc);
  const auto runner = make_runner(rc);
  const auto h0 = harness::simulate_trials(runner, rc.design, original,
                                           cohort::Hypothesis::h0, rc.n_trials,
                                           rc.seed, workers);
  const auto h1 = harness::simulate_trials(runner, rc.design, original,
                                           cohort::Hypothesis::h1, rc.n_trials,
                                           rc.seed, workers);
  json out{{"type", "evaluation"},
           {"config", config_to_json(rc)},
           {"h0", harness::to_json(h0)},
           {"h1", harness::to_json(h1)}};
  write_text(out_path, out.dump(2) + "\n");
  if (!csv_path.empty()) {
    std::ostringstream csv;
    harness::write_evaluation_csv({h0, h1}, csv);
    write_text(csv_path, csv.str());
  }
  return 0;
}

int cmd_sweep(const RunConfig& rc, const std::vector<double>& scale_factors,
              const std::vector<double>& boundaries, const std::string& out_path,
              const std::string& csv_path, int workers) {
  const auto original = original_dataset(rc);
  const auto report = harness::sweep(rc.tad, original, scale_factors,
                                     boundaries, rc.n_trials, rc.seed, workers);
  json out{{"type", "sweep"},
           {"config", config_to_json(rc)},
           {"report", harness::to_json(report)}};
  write_text(out_path, out.dump(2) + "\n");
  if (!csv_path.empty()) {
    std::ostringstream csv;
    harness::write_sweep_csv(report, csv);
    write_text(csv_path, csv.str());
  }
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw Error("cannot open report '" + in_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("invalid report JSON: " + std::string(e.what()));
  }
  std::ostringstream csv;
  const std::string type = j.value("type", "");
  if (type == "evaluation") {
    harness::write_evaluation_csv({harness::evaluation_from_json(j.at("h0")),
                                   harness::evaluation_from_json(j.at("h1"))},
                                  csv);
  } else if (type == "sweep") {
    harness::write_sweep_csv(harness::sweep_from_json(j.at("report")), csv);
  } else {
    throw ParseError("report type must be 'evaluation' or 'sweep'");
  }
  write_text(out_path, csv.str());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  RunConfig rc;
  try {
    if (const auto config_path = config_path_from_args(args)) {
      std::ifstream in(*config_path);
      if (!in) throw Error("cannot open config '" + *config_path + "'");
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw ParseError("invalid config JSON: " + std::string(e.what()));
      }
      config_from_json(j, rc);
    }

    CLI::App app{"TAD-SIE adaptive trial design simulator"};
    app.require_subcommand(1);
    std::string config_path_opt;
    auto add_config_option = [&config_path_opt](CLI::App* cmd) {
      cmd->add_option("--config", config_path_opt,
                      "JSON config file (explicit flags win)");
    };
    add_config_option(&app);

    std::string out_path, csv_path, in_path;
    int workers = default_workers();
    std::vector<double> scale_factors{0.1};
    std::vector<double> boundaries{0.0,  0.01, 0.03, 0.05, 0.07, 0.09,
                                   0.11, 0.13, 0.15, 0.17, 0.19};

    auto add_seed = [&rc](CLI::App* cmd) {
      return cmd->add_option("--seed", rc.seed, "RNG seed (printed if omitted)");
    };
    auto add_source = [&rc](CLI::App* cmd) {
      cmd->add_option("--dataset", rc.dataset_path,
                      "Dataset CSV (with .meta.json sidecar); omit for a "
                      "synthetic cohort");
      cmd->add_option("--n-control", rc.n_control,
                      "Synthetic original control arm size")
          ->capture_default_str();
      cmd->add_option("--n-treatment", rc.n_treatment,
                      "Synthetic original treatment arm size")
          ->capture_default_str();
    };

    CLI::App* generate = app.add_subcommand(
        "generate", "Write a synthetic cohort CSV plus metadata sidecar");
    generate->add_option("--out", out_path, "Output CSV path")->required();
    generate->add_option("--n-control", rc.n_control, "Control arm size")
        ->capture_default_str();
    generate->add_option("--n-treatment", rc.n_treatment, "Treatment arm size")
        ->capture_default_str();
    add_cohort_options(generate, rc.cohort_gen);
    add_config_option(generate);
    auto* generate_seed = add_seed(generate);

    CLI::App* run_trial =
        app.add_subcommand("run-trial", "Run one trial and print its result");
    auto run_trial_flags = add_design_options(run_trial, rc);
    add_source(run_trial);
    add_cohort_options(run_trial, rc.cohort_gen);
    run_trial->add_option("--hypothesis", rc.hypothesis,
                          "Pool resampling mode: h0|h1")
        ->check(CLI::IsMember({"h0", "h1"}))
        ->capture_default_str();
    run_trial->add_option("--out", out_path, "Output path (default stdout)");
    add_config_option(run_trial);
    auto* run_trial_seed = add_seed(run_trial);

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Monte Carlo power and significance for one design");
    auto evaluate_flags = add_design_options(evaluate, rc);
    add_source(evaluate);
    add_cohort_options(evaluate, rc.cohort_gen);
    evaluate->add_option("--n-trials", rc.n_trials, "Trials per hypothesis")
        ->capture_default_str();
    evaluate->add_option("--out", out_path, "Report JSON path (default stdout)");
    evaluate->add_option("--csv", csv_path, "Also render the report as CSV");
    evaluate->add_option("--workers", workers, "Worker threads")
        ->capture_default_str();
    add_config_option(evaluate);
    auto* evaluate_seed = add_seed(evaluate);

    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "Grid sweep over scale factor and futility boundary");
    auto sweep_flags = add_design_options(sweep_cmd, rc);
    add_source(sweep_cmd);
    add_cohort_options(sweep_cmd, rc.cohort_gen);
    sweep_cmd->add_option("--scale-factors", scale_factors,
                          "Scale factor grid")
        ->delimiter(',')
        ->capture_default_str();
    sweep_cmd->add_option("--boundaries", boundaries, "Futility boundary grid")
        ->delimiter(',')
        ->capture_default_str();
    sweep_cmd->add_option("--n-trials", rc.n_trials, "Trials per cell")
        ->capture_default_str();
    sweep_cmd->add_option("--out", out_path, "Report JSON path (default stdout)");
    sweep_cmd->add_option("--csv", csv_path, "Also render the report as CSV");
    sweep_cmd->add_option("--workers", workers, "Worker threads")
        ->capture_default_str();
    add_config_option(sweep_cmd);
    auto* sweep_seed = add_seed(sweep_cmd);

    CLI::App* report = app.add_subcommand(
        "report", "Re-render a saved JSON report as CSV");
    report->add_option("--in", in_path, "Report JSON path")->required();
    report->add_option("--out", out_path, "CSV output path (default stdout)");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("tadsie");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()),
                const_cast<char**>(argv.data()));
    } catch (const CLI::ParseError& e) {
      return app.exit(e);
    }

    auto seed_given = [&rc](CLI::Option* opt) {
      if (opt != nullptr && opt->count() > 0) rc.seed_given = true;
    };
    seed_given(generate_seed);
    seed_given(run_trial_seed);
    seed_given(evaluate_seed);
    seed_given(sweep_seed);
    if (!report->parsed()) finalize_seed(rc);

    if (generate->parsed()) return cmd_generate(rc, out_path);

    const bool scale_set =
        (run_trial->parsed() && run_trial_flags.scale->count() > 0) ||
        (evaluate->parsed() && evaluate_flags.scale->count() > 0) ||
        (sweep_cmd->parsed() && sweep_flags.scale->count() > 0);
    const bool boundary_set =
        (run_trial->parsed() && run_trial_flags.boundary->count() > 0) ||
        (evaluate->parsed() && evaluate_flags.boundary->count() > 0) ||
        (sweep_cmd->parsed() && sweep_flags.boundary->count() > 0);
    apply_design_presets(rc, scale_set, boundary_set);
    sync_baseline(rc);

    if (run_trial->parsed()) return cmd_run_trial(rc, out_path);
    if (evaluate->parsed()) return cmd_evaluate(rc, out_path, csv_path, workers);
    if (sweep_cmd->parsed())
      return cmd_sweep(rc, scale_factors, boundaries, out_path, csv_path,
                       workers);
    if (report->parsed()) return cmd_report(in_path, out_path);
    return 1;
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 4;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tadsie::cli

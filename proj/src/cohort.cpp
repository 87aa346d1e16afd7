#include "tadsie/cohort.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tadsie/errors.hpp"
#include "tadsie/stats.hpp"

namespace tadsie::cohort {

const char* arm_label(Arm arm) {
  return arm == Arm::control ? "control" : "treatment";
}

Arm parse_arm(const std::string& label) {
  if (label == "control") return Arm::control;
  if (label == "treatment") return Arm::treatment;
  throw ParseError("unknown arm label '" + label + "'");
}

const char* hypothesis_label(Hypothesis h) {
  return h == Hypothesis::h0 ? "H0" : "H1";
}

void RctDataset::validate() const {
  if (visits < 2) throw ValidationError("dataset needs at least 2 visits");
  if (!(baseline_index >= 0 && baseline_index < endpoint_index &&
        endpoint_index < visits))
    throw ValidationError("require 0 <= baseline_index < endpoint_index < visits");
  auto check_arm = [&](const std::vector<PatientRecord>& arm, Arm expected) {
    for (const auto& r : arm) {
      if (r.arm != expected)
        throw ValidationError("record " + r.subject_id + " filed under the wrong arm");
      if (r.trajectory.size() != visits)
        throw ValidationError("record " + r.subject_id + " has " +
                              std::to_string(r.trajectory.size()) +
                              " visits, expected " + std::to_string(visits));
      if (!r.trajectory.allFinite())
        throw ValidationError("record " + r.subject_id + " has non-finite values");
    }
  };
  check_arm(control, Arm::control);
  check_arm(treatment, Arm::treatment);
}

void CohortGenConfig::validate() const {
  if (visits < 2) throw ValidationError("cohort config: visits must be >= 2");
  if (!(baseline_index >= 0 && baseline_index < endpoint_index &&
        endpoint_index < visits))
    throw ValidationError(
        "cohort config: require 0 <= baseline_index < endpoint_index < visits");
  if (baseline_sd < 0 || treatment_effect_sd < 0 || noise_sd < 0 ||
      latent_loading_sd < 0)
    throw ValidationError("cohort config: sd fields must be nonnegative");
  if (latent_factor_count < 1)
    throw ValidationError("cohort config: latent_factor_count must be >= 1");
}

namespace {

Eigen::MatrixXd draw_factor_curves(const CohortGenConfig& c, RngStream& rng) {
  Eigen::MatrixXd curves(c.latent_factor_count, c.visits);
  for (Eigen::Index f = 0; f < c.latent_factor_count; ++f)
    for (Eigen::Index v = 0; v < c.visits; ++v) curves(f, v) = rng.normal();
  return curves;
}

PatientRecord draw_subject(const CohortGenConfig& c,
                           const Eigen::MatrixXd& factor_curves, Arm arm,
                           std::uint64_t id, RngStream& rng) {
  PatientRecord r;
  r.subject_id = (arm == Arm::control ? "c" : "t") + std::to_string(id);
  r.arm = arm;
  r.trajectory.resize(c.visits);

  const double base = rng.normal(c.baseline_mean, c.baseline_sd);
  Eigen::VectorXd loadings(c.latent_factor_count);
  for (Eigen::Index f = 0; f < c.latent_factor_count; ++f)
    loadings[f] = rng.normal(0.0, c.latent_loading_sd);
  const double tau = arm == Arm::treatment
                         ? rng.normal(c.treatment_effect_mean, c.treatment_effect_sd)
                         : 0.0;

  const double ramp_span =
      static_cast<double>(c.endpoint_index - c.baseline_index);
  for (Eigen::Index v = 0; v < c.visits; ++v) {
    double score = base + c.control_drift * static_cast<double>(v) +
                   loadings.dot(factor_curves.col(v)) +
                   rng.normal(0.0, c.noise_sd);
    if (arm == Arm::treatment && v > c.baseline_index) {
      const double frac = std::min(
          1.0, static_cast<double>(v - c.baseline_index) / ramp_span);
      score += tau * frac;
    }
    r.trajectory[v] = score;
  }
  return r;
}

}  // namespace

RctDataset generate_cohort(const CohortGenConfig& config, Eigen::Index n_control,
                           Eigen::Index n_treatment, RngStream& rng) {
  config.validate();
  if (n_control < 1 || n_treatment < 1)
    throw ValidationError("generate_cohort: arm sizes must be >= 1");
  RctDataset ds;
  ds.visits = config.visits;
  ds.baseline_index = config.baseline_index;
  ds.endpoint_index = config.endpoint_index;
  const Eigen::MatrixXd curves = draw_factor_curves(config, rng);
  ds.control.reserve(n_control);
  ds.treatment.reserve(n_treatment);
  for (Eigen::Index i = 0; i < n_control; ++i)
    ds.control.push_back(draw_subject(config, curves, Arm::control, i, rng));
  for (Eigen::Index i = 0; i < n_treatment; ++i)
    ds.treatment.push_back(draw_subject(config, curves, Arm::treatment, i, rng));
  return ds;
}

double outcome_change_score(const Eigen::VectorXd& trajectory,
                            Eigen::Index baseline_index,
                            Eigen::Index endpoint_index) {
  if (baseline_index < 0 || endpoint_index < 0 ||
      baseline_index >= trajectory.size() || endpoint_index >= trajectory.size())
    throw std::domain_error("outcome_change_score: visit index out of range");
  return trajectory[endpoint_index] - trajectory[baseline_index];
}

OutcomeFn change_score_outcome(Eigen::Index baseline_index,
                               Eigen::Index endpoint_index) {
  return [baseline_index, endpoint_index](const Eigen::VectorXd& t) {
    return outcome_change_score(t, baseline_index, endpoint_index);
  };
}

Eigen::VectorXd outcomes_of(const std::vector<PatientRecord>& records,
                            const OutcomeFn& outcome) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = outcome(records[i].trajectory);
  return out;
}

void write_dataset_csv(const RctDataset& dataset, std::ostream& out) {
  dataset.validate();
  out << "subject_id,arm";
  for (Eigen::Index v = 0; v < dataset.visits; ++v) out << ",v" << v;
  out << "\n";
  out << std::setprecision(17);
  auto write_arm = [&](const std::vector<PatientRecord>& arm) {
    for (const auto& r : arm) {
      out << r.subject_id << "," << arm_label(r.arm);
      for (Eigen::Index v = 0; v < dataset.visits; ++v) out << "," << r.trajectory[v];
      out << "\n";
    }
  };
  write_arm(dataset.control);
  write_arm(dataset.treatment);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

RctDataset parse_dataset_csv(std::istream& in, Eigen::Index baseline_index,
                             Eigen::Index endpoint_index) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "subject_id" || header[1] != "arm")
    throw ParseError("line 1: expected header subject_id,arm,v0,...");
  const auto visits = static_cast<Eigen::Index>(header.size() - 2);
  for (Eigen::Index v = 0; v < visits; ++v) {
    if (header[static_cast<std::size_t>(v) + 2] != "v" + std::to_string(v))
      throw ParseError("line 1: visit columns must be v0..v" +
                       std::to_string(visits - 1));
  }

  RctDataset ds;
  ds.visits = visits;
  ds.baseline_index = baseline_index;
  ds.endpoint_index = endpoint_index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != visits + 2)
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(visits + 2) + " fields, got " +
                       std::to_string(fields.size()));
    PatientRecord r;
    r.subject_id = fields[0];
    try {
      r.arm = parse_arm(fields[1]);
    } catch (const ParseError&) {
      throw ParseError("line " + std::to_string(line_no) + ": unknown arm label '" +
                       fields[1] + "'");
    }
    r.trajectory.resize(visits);
    for (Eigen::Index v = 0; v < visits; ++v) {
      const std::string& cell = fields[static_cast<std::size_t>(v) + 2];
      std::size_t consumed = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &consumed);
      } catch (const std::exception&) {
        consumed = 0;
      }
      if (consumed != cell.size() || cell.empty())
        throw ParseError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                         cell + "'");
      r.trajectory[v] = value;
    }
    (r.arm == Arm::control ? ds.control : ds.treatment).push_back(std::move(r));
  }
  ds.validate();
  return ds;
}

void save_dataset(const RctDataset& dataset, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("cannot open '" + csv_path + "' for writing");
  write_dataset_csv(dataset, out);
  if (!out) throw Error("failed writing '" + csv_path + "'");

  nlohmann::json meta;
  meta["baseline_index"] = dataset.baseline_index;
  meta["endpoint_index"] = dataset.endpoint_index;
  meta["visits"] = dataset.visits;
  std::ofstream mout(csv_path + ".meta.json");
  if (!mout) throw Error("cannot open '" + csv_path + ".meta.json' for writing");
  mout << meta.dump(2) << "\n";
}

RctDataset load_dataset(const std::string& csv_path) {
  std::ifstream meta_in(csv_path + ".meta.json");
  if (!meta_in)
    throw Error("cannot open metadata sidecar '" + csv_path + ".meta.json'");
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid metadata sidecar: " + std::string(e.what()));
  }
  if (!meta.contains("baseline_index") || !meta.contains("endpoint_index"))
    throw ParseError("metadata sidecar must declare baseline_index and endpoint_index");

  std::ifstream in(csv_path);
  if (!in) throw Error("cannot open dataset '" + csv_path + "'");
  return parse_dataset_csv(in, meta["baseline_index"].get<Eigen::Index>(),
                           meta["endpoint_index"].get<Eigen::Index>());
}

GeneratorSource::GeneratorSource(CohortGenConfig config, RngStream& curve_rng)
    : config_(config) {
  config_.validate();
  factor_curves_ = draw_factor_curves(config_, curve_rng);
}

std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>>
GeneratorSource::recruit(Eigen::Index n_step, RngStream& rng) {
  if (n_step < 1) throw RecruitmentError("recruit: n_step must be >= 1");
  std::vector<PatientRecord> ctrl, treat;
  ctrl.reserve(n_step);
  treat.reserve(n_step);
  for (Eigen::Index i = 0; i < n_step; ++i) {
    ctrl.push_back(
        draw_subject(config_, factor_curves_, Arm::control, next_id_, rng));
    treat.push_back(
        draw_subject(config_, factor_curves_, Arm::treatment, next_id_, rng));
    ++next_id_;
  }
  return {std::move(ctrl), std::move(treat)};
}

PoolSource::PoolSource(RctDataset original, Hypothesis hypothesis,
                       bool with_replacement)
    : original_(std::move(original)),
      hypothesis_(hypothesis),
      with_replacement_(with_replacement) {
  original_.validate();
  if (original_.control.empty())
    throw ValidationError("pool source needs a nonempty control arm");
  if (hypothesis_ == Hypothesis::h1 && original_.treatment.empty())
    throw ValidationError("pool source under H1 needs a nonempty treatment arm");
  if (!with_replacement_) {
    auto fill = [](std::vector<std::size_t>& v, std::size_t n) {
      v.resize(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = i;
    };
    fill(remaining_control_, original_.control.size());
    fill(remaining_treatment_, original_.treatment.size());
  }
}

std::vector<PatientRecord> PoolSource::draw(
    const std::vector<PatientRecord>& pool, std::vector<std::size_t>& remaining,
    Arm arm, Eigen::Index n_step, RngStream& rng) {
  std::vector<PatientRecord> out;
  out.reserve(n_step);
  for (Eigen::Index i = 0; i < n_step; ++i) {
    std::size_t idx;
    if (with_replacement_) {
      idx = rng.uniform_index(pool.size());
    } else {
      if (remaining.empty())
        throw RecruitmentError("subject pool exhausted (no-replacement mode)");
      const std::size_t pick = rng.uniform_index(remaining.size());
      idx = remaining[pick];
      remaining[pick] = remaining.back();
      remaining.pop_back();
    }
    PatientRecord r = pool[idx];
    r.arm = arm;  // relabel when H0 assigns control subjects to the treatment arm
    out.push_back(std::move(r));
  }
  return out;
}

std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>>
PoolSource::recruit(Eigen::Index n_step, RngStream& rng) {
  if (n_step < 1) throw RecruitmentError("recruit: n_step must be >= 1");
  const auto& treat_pool =
      hypothesis_ == Hypothesis::h0 ? original_.control : original_.treatment;
  auto& treat_remaining = hypothesis_ == Hypothesis::h0 ? remaining_control_
                                                        : remaining_treatment_;
  auto ctrl =
      draw(original_.control, remaining_control_, Arm::control, n_step, rng);
  auto treat = draw(treat_pool, treat_remaining, Arm::treatment, n_step, rng);
  return {std::move(ctrl), std::move(treat)};
}

std::pair<std::vector<PatientRecord>, std::vector<PatientRecord>> recruit(
    SubjectSource& source, Eigen::Index n_step, RngStream& rng) {
  return source.recruit(n_step, rng);
}

}  // namespace tadsie::cohort

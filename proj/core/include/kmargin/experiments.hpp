#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kmargin/classify.hpp"

namespace kmargin {

// Configuration for one named experiment. The lambda schedule is
// lambda_n = lambda_c * n^(-lambda_exponent); schedule-driven
// experiments require the exponent in (0,1): the regularizer must decay,
// but slowly enough that the sieve keeps growing.
struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 1;
  std::vector<int> sizes;  // empty -> experiment defaults
  double lambda_c = 0.1;
  double lambda_exponent = 0.5;
  Kernel kernel = Kernel::gaussian(1.0);
  LossKind loss = LossKind::kHinge;
  OptBackend backend = OptBackend::kSubgrad;
  std::string out_path;  // empty -> report not written to disk
};

struct Verdict {
  std::string name;  // the invariant being checked
  bool pass;
  std::string detail;
};

// CSV-shaped report. Data rows are bit-for-bit reproducible given
// (config, seed); per-row wall times ride on the generated-at line when
// the report is written, keeping every other byte deterministic.
struct ExperimentReport {
  std::string experiment;
  std::string header;              // comma-separated column names
  std::vector<std::string> rows;   // data rows, deterministic
  std::vector<double> wall_ms;     // one entry per row
  std::vector<Verdict> verdicts;

  bool all_pass() const;
};

// Experiments: sv_fraction, psi_bound, sieve_bound, calibration,
// consistency, cca_power, sdr_recovery. Unknown names throw
// std::invalid_argument. Writes the report to config.out_path if set.
ExperimentReport run_experiment(const ExperimentConfig& config);

void write_report(const ExperimentReport& report, const std::string& path);

}  // namespace kmargin

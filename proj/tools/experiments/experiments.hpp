#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "mlmcuq/parallel.hpp"
#include "mlmcuq/sparse_quad.hpp"

namespace mlmcuq::experiments {

/// One CSV file: a header row, then rows of preformatted cells.
struct CsvTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

/// Shortest round-trip text of a double ("nan" for NaN, "" for the empty marker).
std::string cell(double value);
std::string cell(std::size_t value);
std::string cell(int value);

struct ExperimentOutput {
  nlohmann::json summary;
  std::vector<CsvTable> tables;
};

/// Runs config.experiment. Library errors propagate as mlmcuq::Error.
ExperimentOutput run_experiment(const ExperimentConfig& config, const WorkerPool& pool);

/// Writes summary.json (with version and resolved config) and every table
/// into `dir`, creating it if needed.
void write_outputs(const std::string& dir, const ExperimentConfig& config, const ExperimentOutput& out);

/// Derivative-jump test of a scalar profile g around a crossing parameter t*.
struct KinkCertificate {
  double left_slope = 0.0;
  double right_slope = 0.0;
  /// |right_slope - left_slope|.
  double mismatch = 0.0;
  /// Largest change of the one-sided difference quotient within one side.
  double smooth_variation = 0.0;
  /// Largest |g(t + dt) - g(t)| over the scan with dt = continuity_step.
  double max_jump = 0.0;
  double range = 0.0;
  bool kink = false;
  bool continuous = false;
};

/// Difference quotients with step `step` on each side of t_star; continuity
/// scanned over [lo, hi] at `scan` points with step 1e-6.
KinkCertificate certify_kink(const std::function<double(double)>& g, double t_star, double lo, double hi,
                             double step = 1e-3, std::size_t scan = 2001, double continuity_step = 1e-6);

/// Least-squares slope of log(error) vs log(evaluations) over the last decade
/// of evaluations in an adaptive trace.
double final_decade_slope(const std::vector<TraceEntry>& trace);

}  // namespace mlmcuq::experiments

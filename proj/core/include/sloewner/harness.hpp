#pragma once

#include <map>
#include <string>
#include <vector>

#include "sloewner/oracle.hpp"
#include "sloewner/solver.hpp"
#include "sloewner/types.hpp"

namespace sloewner {

// Evaluation points i*omega on the imaginary axis, sorted by |omega|.
struct FrequencyGrid {
  enum class Kind { Log, Linear };
  Kind kind = Kind::Log;
  double start = 0.0;  // omega bounds
  double end = 0.0;
  int count = 0;
  std::vector<Complex> points;
};

FrequencyGrid log_grid(double omega_start, double omega_end, int count);
FrequencyGrid linear_grid(double omega_start, double omega_end, int count);

struct BodePoint {
  double omega = 0.0;
  Complex value;
  double magnitude_db = 0.0;
  double phase_deg = 0.0;  // unwrapped
  bool finite = true;
};

// SISO frequency response sweep; singular points are flagged, not fatal.
std::vector<BodePoint> bode_grid(const TransferOracle& evaluator,
                                 const FrequencyGrid& grid);

// Per-point and maximum errors over a grid; the maximum absolute error is
// the sampled H-infinity proxy. MIMO errors use the spectral norm.
struct ErrorReport {
  std::vector<double> abs_err;
  std::vector<double> rel_err;
  double max_abs = 0.0;
  double max_rel = 0.0;
  Complex argmax_abs_point;
  Complex argmax_rel_point;
};

ErrorReport error_metrics(const TransferOracle& candidate,
                          const TransferOracle& reference,
                          const FrequencyGrid& grid);

// Variant with precomputed reference samples (one sweep shared by several
// candidates).
ErrorReport error_metrics(const TransferOracle& candidate,
                          const std::vector<Matrix>& reference_values,
                          const FrequencyGrid& grid);

struct ExperimentOptions {
  std::string method = "all";  // loewner | additional | hermite | all
  int qf = 1;
  int qg = -1;  // -1: K - qf
  bool make_real = true;
  double truncation_tol = kRankTruncationTol;
  unsigned seed = 0;
  int grid_points = 500;
  std::string out_dir;  // when set: rom JSON, bode CSV, report JSON
};

struct ExperimentResult {
  FrequencyGrid grid;
  std::map<std::string, StructuredRealization> realizations;
  std::map<std::string, ErrorReport> errors;
};

// Reproduces the benchmark workflow for one of the named systems
// (delay | rod | duct | beam): builds the model, samples n-th order data on
// the system's band (conjugate-closed), realizes with the requested
// method(s), and reports sampled H-infinity errors against the full model
// (the analytic transfer function for the duct).
ExperimentResult run_experiment(const std::string& name, int n,
                                const ExperimentOptions& opts = {});

}  // namespace sloewner

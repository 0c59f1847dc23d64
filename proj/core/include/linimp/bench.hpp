#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linimp/integrator.hpp"
#include "linimp/problems.hpp"

namespace linimp {

enum class ErrorMetric {
  max_over_steps,  ///< max_n |u_n - u(t_n)|, needs a closed form solution
  final_time,      ///< |u_N - u(T)| against the closed form or a reference run
};

/// One figure's worth of runs, read from a YAML plan file.
struct ExperimentPlan {
  std::string name;
  std::string description;
  ProblemParams problem;
  std::vector<std::string> methods;
  std::vector<double> h;  ///< strictly decreasing
  double T = 1.0;
  GammaInit gamma_init = GammaInit::exact;
  ErrorMetric metric = ErrorMetric::final_time;
  int repetitions = 1;
  bool timing = false;
  bool expensive = false;
  /// Reference step for problems without closed form; default min(h)/10.
  std::optional<double> h_reference;
  /// Record energies along every run.
  bool energy_trace = false;

  /// Throws InvalidArgument for fewer than 3 step sizes, a schedule that is
  /// not strictly decreasing, or a non-positive final time.
  void validate() const;

  static ExperimentPlan from_yaml(const std::string& text);
  static ExperimentPlan load(const std::filesystem::path& file);
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root mean square residual of the fit in log10 units.
  double residual = 0.0;
  int points = 0;
};

/// Ordinary least squares of log10(error) against log10(h), skipping pairs
/// with non-finite errors or errors at or below `floor`.  Throws
/// InsufficientData with fewer than 3 usable pairs.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points, double floor = 1e-14);

struct EnergySample {
  double t = 0.0;
  std::map<std::string, double> values;
  double min_u = 0.0;
};

struct CellResult {
  std::string method;
  double h = 0.0;
  std::int64_t steps = 0;
  double error = 0.0;
  /// Median wall clock over the repetitions.
  double seconds = 0.0;
  std::vector<double> timings;
  bool ok = false;
  std::string failure;
  std::int64_t guard_violations = 0;
  std::vector<EnergySample> energy_trace;
};

struct MethodSummary {
  std::string method;
  std::optional<SlopeFit> fit;
  std::string note;
};

struct ConvergenceReport {
  std::string plan;
  std::string problem;
  std::string metric;
  double T = 0.0;
  std::optional<double> reference_h;
  std::vector<CellResult> cells;
  std::vector<MethodSummary> methods;

  /// Cells of one method ordered by decreasing h.
  std::vector<CellResult> cells_of(const std::string& method) const;
  const MethodSummary* summary_of(const std::string& method) const;
};

struct BenchOptions {
  int parallel = 1;
  /// Directory for the reference solution cache; empty disables disk caching.
  std::filesystem::path cache_dir;
};

/// Runs every (method, h) cell.  Cell failures are recorded and the run
/// continues.  For problems without closed form solution a Gauss reference
/// run is computed first and cached.
ConvergenceReport run_convergence(const ExperimentPlan& plan, const BenchOptions& options = {});

struct TimingRow {
  std::string method;
  double h = 0.0;
  double error = 0.0;
  double seconds = 0.0;
};

/// Runs the cells one at a time with at least 3 repetitions and returns
/// (error, median seconds) rows sorted by error.
std::vector<TimingRow> run_timing(const ExperimentPlan& plan, const BenchOptions& options = {});

/// Writes report.csv, report.json and one <method>.dat per method (plus
/// <method>_energy.dat when energies were traced).
void write_reports(const ConvergenceReport& report, const std::filesystem::path& dir,
                   const std::vector<TimingRow>& timing = {});

}  // namespace linimp

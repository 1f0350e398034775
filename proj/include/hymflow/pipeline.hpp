#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hymflow/checkpoint.hpp"
#include "hymflow/config.hpp"
#include "hymflow/diagnostics.hpp"

namespace hymflow {

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_verdict_failed = 1, exit_flow_aborted = 2, exit_usage = 3 };

GridGeometry make_geometry(const RunConfig& config);
MetricField make_config_metric(const RunConfig& config);

/// Test bundle with the seeded conformal perturbation applied to H (and H0).
BundleState make_config_bundle(const RunConfig& config, const GridGeometry& grid);

struct MetricCertificate {
  MetricConditions conditions;
  bool kahler = false;
  bool gauduchon = false;
  bool astheno = false;  ///< del delbar omega^{n-2} = 0; automatic for n = 1
  /// Residuals below tolerance * (1 + ||omega||) certify a condition.
  static constexpr double tolerance = 1e-8;
};

MetricCertificate certify_metric(const MetricField& metric);

struct Verdict {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct RunReport {
  int exit_code = exit_ok;
  std::vector<Verdict> verdicts;
  std::vector<std::string> warnings;
  std::vector<DiagnosticsRecord> records;
  std::vector<Cluster> clusters;
  double lambda = 0.0;
  double dt = 0.0;
  std::string failure;  ///< non-empty if the flow aborted
  std::string summary() const;
};

/// Builds geometry, certifies the metric, builds the bundle, integrates, runs
/// every enabled check, and writes CSV, checkpoints and summary into the
/// output directory. Log lines (including gating warnings) go to `log`.
RunReport run_pipeline(const RunConfig& config, std::ostream& log);

struct CompareReport {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> discrepancy;
  double worst() const;
  bool passed() const { return worst() <= 5.0 * dt; }
};

/// Integrates both formulations from the same initial data and compares them
/// through the gauge link at every recorded time.
CompareReport compare_flows(const RunConfig& config);

struct DiagnoseOptions {
  bool phi = false;
  bool sigma_scan = false;
  double eps1 = 1e-2;
};

/// Reports observables of a checkpoint; `--phi` uses the stored states that
/// share its directory, `--sigma-scan` a dyadic density scan.
std::string diagnose(const std::string& checkpoint_path, const DiagnoseOptions& options);

}  // namespace hymflow

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hymflow/bundle.hpp"
#include "hymflow/flow.hpp"
#include "hymflow/geometry.hpp"

namespace hymflow {

/// Which of the two equivalent flows `run` integrates.
enum class Formulation { metric, connection };

Formulation parse_formulation(const std::string& name);
std::string to_string(Formulation f);

struct RunConfig {
  // geometry
  int n = 1;
  int N = 16;
  std::vector<double> periods;  ///< empty: unit periods

  // metric
  MetricKind metric_kind = MetricKind::kahler_flat;
  double metric_amplitude = 0.0;

  // bundle
  BundleSpec bundle;
  double perturbation = 0.0;  ///< size of the random conformal factor on the initial metric
  int perturbation_mode = 1;  ///< highest Fourier mode of that factor

  // flow
  Formulation formulation = Formulation::metric;
  FlowConfig flow;
  std::uint64_t seed = 0;

  // diagnostics
  double eps1 = 1e-2;
  double sigma_radius = 0.0;             ///< 0: i_X / 8
  std::vector<double> phi_radii;         ///< empty disables the Phi check
  std::vector<std::vector<double>> phi_points;
  double phi_R = 0.0;                    ///< 0: i_X
  double phi_t0 = 0.0;                   ///< 0: t_end
  double phi_C = 20.0;
  int kernel_exponent = 0;               ///< 0: n
  bool torsion_check = true;
  bool energy_check = true;
  bool max_principle_check = true;
  bool sigma_check = true;
  double he_target = 0.0;                ///< > 0 requires he_resid <= he_target * sup|Lambda F|(0)

  // output
  std::string out_dir = "out";
  bool write_csv = true;
  bool write_checkpoint = true;
  bool write_summary = true;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `section.key = value` lines; '#' starts a comment. Throws
/// ConfigError naming the line for syntax errors and the key for semantic ones.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Semantic checks that hold after command-line overrides as well.
void validate(const RunConfig& config);

}  // namespace hymflow

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hymflow/bundle.hpp"
#include "hymflow/flow.hpp"
#include "hymflow/geometry.hpp"

namespace hymflow {

/// One time sample of the monitored quantities. Field order is the CSV column order.
struct DiagnosticsRecord {
  double t = 0.0;
  double ym = 0.0;                  ///< int |F|^2 dV
  double dtA_l2sq = 0.0;            ///< int |dA/dt|^2 dV
  double sup_lambda_f = 0.0;        ///< sup |Lambda F|
  double l2_lambda_f = 0.0;         ///< ||Lambda F||_2
  double i_func = 0.0;              ///< int |D_A Lambda F|^2 dV
  double he_resid = 0.0;            ///< sup |i Lambda F - lambda Id|
  double torsion_pair = 0.0;        ///< Re int <(tau + taubar)* F, dA/dt> dV
  double energy_ident_resid = 0.0;  ///< filled by energy_identity_residual
  double integrability_resid = 0.0;

  static const std::vector<std::string>& field_names();
  std::vector<double> values() const;
};

/// Chern connection of (delbar + a, H) in an H-unitary frame; all
/// gauge-invariant observables of a metric-flow state are read from it.
ConnectionState unitary_connection(const GridGeometry& grid, const BundleState& bundle);

struct TorsionPairing {
  double value = 0.0;  ///< Re int <(tau + taubar)* F, dA/dt> dV
  double scale = 0.0;  ///< int |(tau + taubar)* F| |dA/dt| dV
  double ratio() const { return scale > 0.0 ? std::abs(value) / scale : 0.0; }
};

/// Everything except energy_ident_resid; `pairing` optionally receives the
/// full torsion pairing.
DiagnosticsRecord flow_observables(const ConnectionState& state, const MetricField& metric,
                                   double lambda, double t = 0.0,
                                   TorsionPairing* pairing = nullptr);
DiagnosticsRecord flow_observables(const BundleState& state, const MetricField& metric,
                                   double lambda, double t = 0.0,
                                   TorsionPairing* pairing = nullptr);

/// Pointwise e(A) = |F_A|^2.
Eigen::ArrayXd energy_density(const ConnectionState& state, const MetricField& metric);

double i_functional(const ConnectionState& state, const MetricField& metric);

TorsionPairing torsion_pairing(const FormField& F, const FormField& dtA, const MetricField& metric);
TorsionPairing torsion_pairing(const ConnectionState& state, const MetricField& metric);

/// |YM(t) + 2 int_0^t int |dA/dt|^2 - YM(0)| / max(YM(0), eps), trapezoidal in t.
/// Also stores the values into the records.
std::vector<double> energy_identity_residual(std::vector<DiagnosticsRecord>& records);

struct LocalEnergy {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};

/// Both sides of the local energy inequality with calibration constant C.
/// `records` supply int |dA/dt|^2 over time. Throws std::invalid_argument if
/// R > i_X / 2 or s, tau are not stored times.
LocalEnergy local_energy_check(const Trajectory<ConnectionState>& traj,
                               const std::vector<DiagnosticsRecord>& records,
                               const MetricField& metric, const std::vector<double>& x0, double R,
                               double s, double tau, double C);

struct PhiOptions {
  std::vector<double> x0;
  double t0 = 0.0;
  std::vector<double> radii;
  double R = 0.0;
  double C = 20.0;
  /// Exponent k of (4 pi (t0 - t))^{-k}; 0 selects n, the Gaussian normalization.
  int kernel_exponent = 0;
};

struct PhiResult {
  std::vector<double> radii;
  std::vector<double> values;
  double ym0 = 0.0;
  double parabolic_energy = 0.0;  ///< int over P_R of |F|^2, clipped to the stored times
  bool verdict = true;
  /// Relative spread max Phi / min Phi - 1 over the ladder.
  double variation() const;
};

/// Heat-kernel weighted energy Phi(r) = r^2 int_{T_r} e f^2 G dV dt and the
/// almost-monotonicity verdict over all radius pairs.
PhiResult phi_monotonicity(const Trajectory<ConnectionState>& traj, const MetricField& metric,
                           const PhiOptions& options);

/// Periodized backward heat kernel over the 3^{2n} nearest translates.
Eigen::ArrayXd backward_heat_kernel(const GridGeometry& grid, const std::vector<double>& x0,
                                    double s, int exponent);

struct DensityMap {
  double radius = 0.0;
  double eps1 = 0.0;
  Eigen::ArrayXd values;  ///< r^{4-2n} int_{B_r(x)} e dV
  Eigen::Array<bool, Eigen::Dynamic, 1> mask;

  Index marked() const { return mask.count(); }
};

DensityMap density_scan(const Eigen::ArrayXd& energy, const MetricField& metric, double r,
                        double eps1);
DensityMap density_scan(const ConnectionState& state, const MetricField& metric, double r,
                        double eps1);

struct Cluster {
  double value = 0.0;  ///< mean eigenvalue
  int multiplicity = 0;
  double spread = 0.0;  ///< max - min within the cluster
};

/// Spatial variation sup_x |X(x) - mean X| of a Hermitian field.
double field_variation(const MatrixField& field);

/// Pools the pointwise eigenvalues, sorts descending, and splits at gaps wider
/// than 0.2 |max - min| + 10 noise. A negative noise uses field_variation.
std::vector<Cluster> eigenvalue_clustering(const MatrixField& field, double noise = -1.0);

/// Clusters of i Lambda F. The noise also counts the covariant variation
/// sqrt(I / Vol): eigenspaces the connection still couples are not split.
std::vector<Cluster> eigenvalue_clustering(const ConnectionState& state, const MetricField& metric);

}  // namespace hymflow

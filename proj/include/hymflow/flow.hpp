#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hymflow/bundle.hpp"
#include "hymflow/geometry.hpp"

namespace hymflow {

enum class Scheme { rk4, euler };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

struct FlowConfig {
  double dt = 0.0;          ///< 0 selects cfl_timestep
  double t_end = 1.0;
  double cfl = 0.1;
  Scheme scheme = Scheme::rk4;
  int record_every = 1;     ///< steps between observer calls
  int checkpoint_every = 0; ///< steps between stored states; 0 keeps first and last only
  double blowup_factor = 1e6;
};

enum class FlowFailure { positivity_lost, blowup, cfl_violation, integrability, non_finite };

std::string to_string(FlowFailure kind);

class FlowAborted : public std::runtime_error {
 public:
  FlowAborted(FlowFailure kind, double t, const std::string& detail);
  FlowFailure kind() const { return kind_; }
  double time() const { return t_; }

 private:
  FlowFailure kind_;
  double t_;
};

template <typename State>
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;  ///< times of stored states, strictly increasing
  std::vector<State> states;

  void push(double t, const State& s) {
    times.push_back(t);
    states.push_back(s);
  }
};

/// Called at step 0, every record_every steps, and after the final step.
template <typename State>
using Observer = std::function<void(int step, double t, const State& state)>;

/// dt = cfl * h_min^2 / (4 n Lambda_max), with Lambda_max the largest
/// eigenvalue of g^{-1} over the grid.
double cfl_timestep(const MetricField& metric, double cfl);

/// Largest stable Courant factor of the explicit scheme on the principal part.
double max_stable_cfl(Scheme scheme);

/// dH/dt = -2 H (i Lambda F_H - lambda Id).
MatrixField metric_flow_rhs(const BundleState& bundle, const MetricField& metric, double lambda);

/// dA/dt = i (delbar_A - del_A) Lambda F_A in the H0-unitary frame.
FormField connection_flow_rhs(const ConnectionState& state, const MetricField& metric);

/// L2 gap between connection_flow_rhs and -D*_A F - (tau + taubar)* F,
/// relative to the sizes of the two terms.
double rhs_cross_check(const ConnectionState& state, const MetricField& metric);

/// Resolves dt (explicit or CFL) and the step count; the step is shrunk so an
/// integer number of steps lands exactly on t_end. Throws FlowAborted with
/// cfl_violation if an explicit dt is unstable for the scheme.
struct StepPlan {
  double dt = 0.0;
  int steps = 0;
};
StepPlan plan_steps(const FlowConfig& config, const MetricField& metric);

/// Metric flow with a fixed holomorphic structure. States are appended to
/// `out` as they are accepted, so `out` holds the last good state on abort.
void integrate(const BundleState& initial, const FlowConfig& config, const MetricField& metric,
               double lambda, Trajectory<BundleState>& out,
               const Observer<BundleState>& observer = {});

/// Connection heat flow.
void integrate(const ConnectionState& initial, const FlowConfig& config,
               const MetricField& metric, Trajectory<ConnectionState>& out,
               const Observer<ConnectionState>& observer = {});

/// sigma with sigma^{*H0} sigma = H0^{-1} H, the H0-self-adjoint positive root.
MatrixField gauge_link(const MatrixField& H, const MatrixField& H0);

/// Gauge-invariant fingerprint of a connection.
struct InvariantObservables {
  double ym = 0.0;
  double l2_lambda_f = 0.0;
  std::vector<Eigen::VectorXd> eigenvalues;  ///< of i Lambda F at the sample sites
};

InvariantObservables invariant_observables(const ConnectionState& state, const MetricField& metric,
                                           const std::vector<Index>& sample_sites);

/// Maximum relative discrepancy of invariant observables between sigma(t)(A0),
/// built from the metric-flow trajectory, and the heat-flow trajectory, at
/// each shared time. Throws std::invalid_argument if the time grids differ.
std::vector<double> trajectory_equivalence(const Trajectory<BundleState>& traj_H,
                                           const Trajectory<ConnectionState>& traj_A,
                                           const MetricField& metric,
                                           const std::vector<Index>& sample_sites);

}  // namespace hymflow

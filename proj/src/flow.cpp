#include "hymflow/flow.hpp"

#include <algorithm>
#include <cmath>

namespace hymflow {

namespace {

constexpr cplx I(0.0, 1.0);

// i delbar_A Lambda F: the (0,1)-part of the heat-flow velocity.
FormField heat_velocity_01(const ConnectionState& state, const MetricField& metric) {
  const FormField A = connection_form(state);
  const FormField F = curvature_of(metric.grid, A, state.fluxes);
  const FormField lf = zero_form_field(metric.grid.n, lambda_contract(F, metric));
  FormField v = covariant_derivative(metric.grid, A, lf, Part::antiholomorphic);
  return v *= I;
}

double sup_norm(const FormField& F, const MetricField& metric) {
  return std::sqrt(std::max(0.0, pointwise_norm_sq(F, metric).maxCoeff()));
}

bool finite(const MatrixField& m) { return m.raw().allFinite(); }

bool finite(const FormField& f) {
  for (FormMask m : f.masks())
    if (!finite(f[m])) return false;
  return true;
}

// Generic explicit integrator over a state with a linear velocity space.
template <typename State, typename Rhs, typename Axpy, typename Accept>
void run_scheme(const State& initial, const FlowConfig& config, const StepPlan& plan, Rhs rhs,
                Axpy axpy, Accept accept, Trajectory<State>& out,
                const Observer<State>& observer) {
  out.dt = plan.dt;
  out.push(0.0, initial);
  if (observer) observer(0, 0.0, initial);
  State y = initial;
  const double h = plan.dt;
  for (int step = 1; step <= plan.steps; ++step) {
    if (config.scheme == Scheme::euler) {
      y = axpy(y, rhs(y), h);
    } else {
      const auto k1 = rhs(y);
      const auto k2 = rhs(axpy(y, k1, h / 2));
      const auto k3 = rhs(axpy(y, k2, h / 2));
      const auto k4 = rhs(axpy(y, k3, h));
      State next = axpy(y, k1, h / 6);
      next = axpy(next, k2, h / 3);
      next = axpy(next, k3, h / 3);
      y = axpy(next, k4, h / 6);
    }
    const double t = step * h;
    const bool record = step % std::max(1, config.record_every) == 0 || step == plan.steps;
    accept(y, t, record);
    const bool keep = step == plan.steps ||
                      (config.checkpoint_every > 0 && step % config.checkpoint_every == 0);
    if (keep) out.push(t, y);
    if (record && observer) observer(step, t, y);
  }
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "rk4") return Scheme::rk4;
  if (name == "euler") return Scheme::euler;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

std::string to_string(Scheme scheme) { return scheme == Scheme::rk4 ? "rk4" : "euler"; }

std::string to_string(FlowFailure kind) {
  switch (kind) {
    case FlowFailure::positivity_lost: return "PositivityLost";
    case FlowFailure::blowup: return "Blowup";
    case FlowFailure::cfl_violation: return "CflViolation";
    case FlowFailure::integrability: return "IntegrabilityLost";
    case FlowFailure::non_finite: return "NonFinite";
  }
  return "?";
}

FlowAborted::FlowAborted(FlowFailure kind, double t, const std::string& detail)
    : std::runtime_error(to_string(kind) + " at t=" + std::to_string(t) + ": " + detail),
      kind_(kind),
      t_(t) {}

double cfl_timestep(const MetricField& metric, double cfl) {
  // Largest eigenvalue of g^{-1} is 1 / smallest eigenvalue of g.
  const double lambda_max = 1.0 / min_eigenvalue(metric.g).minCoeff();
  const double h = metric.grid.min_spacing();
  return cfl * h * h / (4.0 * metric.grid.n * lambda_max);
}

double max_stable_cfl(Scheme scheme) {
  // Spectral radius of the principal part is about (pi^2 / 2) / cfl_timestep(1);
  // real-axis stability limits are 2.78 (RK4) and 2 (Euler), less a margin.
  return scheme == Scheme::rk4 ? 0.55 : 0.40;
}

MatrixField metric_flow_rhs(const BundleState& bundle, const MetricField& metric, double lambda) {
  const FormField F = curvature(metric.grid, bundle);
  MatrixField L = I * lambda_contract(F, metric);
  L -= lambda * MatrixField::identity(L.sites(), L.dim());
  return -2.0 * (bundle.H * L);
}

FormField connection_flow_rhs(const ConnectionState& state, const MetricField& metric) {
  const FormField A = connection_form(state);
  const FormField F = curvature_of(metric.grid, A, state.fluxes);
  const FormField lf = zero_form_field(metric.grid.n, lambda_contract(F, metric));
  FormField v = I * covariant_derivative(metric.grid, A, lf, Part::antiholomorphic);
  v -= I * covariant_derivative(metric.grid, A, lf, Part::holomorphic);
  return v;
}

double rhs_cross_check(const ConnectionState& state, const MetricField& metric) {
  const FormField A = connection_form(state);
  const FormField F = curvature_of(metric.grid, A, state.fluxes);
  const FormField lhs = connection_flow_rhs(state, metric);
  const FormField dstar = codifferential(A, F, metric);
  const FormField tstar = torsion_adjoint_apply(F, metric);
  FormField rhs = dstar + tstar;
  rhs *= -1.0;
  // The two terms can cancel exactly; measure against their size, not their sum.
  const double scale = std::max(l2_norm(lhs, metric), l2_norm(dstar, metric) + l2_norm(tstar, metric));
  const double diff = l2_norm(lhs - rhs, metric);
  return scale > 0.0 ? diff / scale : diff;
}

StepPlan plan_steps(const FlowConfig& config, const MetricField& metric) {
  const double unit = cfl_timestep(metric, 1.0);
  const double limit = max_stable_cfl(config.scheme);
  double dt = config.dt;
  if (dt > 0.0) {
    if (dt / unit > limit) {
      throw FlowAborted(FlowFailure::cfl_violation, 0.0,
                        "dt=" + std::to_string(dt) + " exceeds the stable step " +
                            std::to_string(limit * unit));
    }
  } else {
    if (config.cfl > limit) {
      throw FlowAborted(FlowFailure::cfl_violation, 0.0,
                        "cfl=" + std::to_string(config.cfl) + " above the stable limit " +
                            std::to_string(limit) + " for " + to_string(config.scheme));
    }
    dt = unit * config.cfl;
  }
  StepPlan plan;
  if (config.t_end <= 0.0) return StepPlan{dt, 0};
  plan.steps = static_cast<int>(std::ceil(config.t_end / dt - 1e-9));
  plan.dt = config.t_end / plan.steps;
  return plan;
}

void integrate(const BundleState& initial, const FlowConfig& config, const MetricField& metric,
               double lambda, Trajectory<BundleState>& out,
               const Observer<BundleState>& observer) {
  const StepPlan plan = plan_steps(config, metric);
  const double ceiling =
      config.blowup_factor * std::max(sup_norm(curvature(metric.grid, initial), metric), 1e-12);

  auto rhs = [&](const BundleState& s) { return metric_flow_rhs(s, metric, lambda); };
  auto axpy = [](const BundleState& s, const MatrixField& k, double h) {
    BundleState next = s;
    next.H += h * k;
    return next;
  };
  auto accept = [&](BundleState& s, double t, bool record) {
    s.H = hermitian_part(s.H);
    if (!finite(s.H)) throw FlowAborted(FlowFailure::non_finite, t, "bundle metric");
    const double low = min_eigenvalue(s.H).minCoeff();
    if (low <= 0.0) {
      throw FlowAborted(FlowFailure::positivity_lost, t,
                        "min eigenvalue " + std::to_string(low));
    }
    if (record) {
      const double sup = sup_norm(curvature(metric.grid, s), metric);
      if (!(sup <= ceiling)) throw FlowAborted(FlowFailure::blowup, t, "sup|F| " + std::to_string(sup));
    }
  };
  run_scheme(initial, config, plan, rhs, axpy, accept, out, observer);
}

void integrate(const ConnectionState& initial, const FlowConfig& config,
               const MetricField& metric, Trajectory<ConnectionState>& out,
               const Observer<ConnectionState>& observer) {
  const StepPlan plan = plan_steps(config, metric);
  const GridGeometry& grid = metric.grid;
  const double ceiling =
      config.blowup_factor * std::max(sup_norm(curvature(grid, initial), metric), 1e-12);
  const double integrability_cap =
      std::max(10.0 * integrability_residual(grid, initial.a), integrability_tolerance());

  auto rhs = [&](const ConnectionState& s) { return heat_velocity_01(s, metric); };
  auto axpy = [](const ConnectionState& s, const FormField& k, double h) {
    ConnectionState next = s;
    next.a += h * k;
    return next;
  };
  auto accept = [&](ConnectionState& s, double t, bool record) {
    if (!finite(s.a)) throw FlowAborted(FlowFailure::non_finite, t, "connection");
    if (record) {
      const double sup = sup_norm(curvature(grid, s), metric);
      if (!(sup <= ceiling)) throw FlowAborted(FlowFailure::blowup, t, "sup|F| " + std::to_string(sup));
      const double resid = integrability_residual(grid, s.a);
      if (resid > integrability_cap) {
        throw FlowAborted(FlowFailure::integrability, t, "residual " + std::to_string(resid));
      }
    }
  };
  run_scheme(initial, config, plan, rhs, axpy, accept, out, observer);
}

MatrixField gauge_link(const MatrixField& H, const MatrixField& H0) {
  if (min_eigenvalue(H).minCoeff() <= 0.0 || min_eigenvalue(H0).minCoeff() <= 0.0) {
    throw std::domain_error("gauge_link needs positive metrics");
  }
  const MatrixField g0 = sqrt_hermitian(H0);
  const MatrixField g0inv = inverse(g0);
  const MatrixField root = sqrt_hermitian(hermitian_part(g0inv * H * g0inv));
  return g0inv * root * g0;
}

InvariantObservables invariant_observables(const ConnectionState& state, const MetricField& metric,
                                           const std::vector<Index>& sample_sites) {
  const FormField F = curvature(metric.grid, state);
  const MatrixField ilf = I * lambda_contract(F, metric);
  InvariantObservables obs;
  obs.ym = integrate(pointwise_norm_sq(F, metric), metric);
  obs.l2_lambda_f = std::sqrt(std::max(0.0, integrate(frobenius_sq(ilf), metric)));
  for (Index s : sample_sites) obs.eigenvalues.push_back(hermitian_eigenvalues(ilf, s));
  return obs;
}

std::vector<double> trajectory_equivalence(const Trajectory<BundleState>& traj_H,
                                           const Trajectory<ConnectionState>& traj_A,
                                           const MetricField& metric,
                                           const std::vector<Index>& sample_sites) {
  if (traj_H.times.size() != traj_A.times.size() || traj_A.states.empty()) {
    throw std::invalid_argument("trajectories are sampled at different times");
  }
  for (size_t k = 0; k < traj_H.times.size(); ++k) {
    const double t = traj_H.times[k];
    if (std::abs(t - traj_A.times[k]) > 1e-12 * std::max(1.0, std::abs(t))) {
      throw std::invalid_argument("trajectories are sampled at different times");
    }
  }
  const ConnectionState& A0 = traj_A.states.front();
  std::vector<double> out;
  for (size_t k = 0; k < traj_H.times.size(); ++k) {
    const BundleState& b = traj_H.states[k];
    const ConnectionState linked = gauge_act(metric.grid, gauge_link(b.H, b.H0), A0);
    const InvariantObservables x = invariant_observables(linked, metric, sample_sites);
    const InvariantObservables y = invariant_observables(traj_A.states[k], metric, sample_sites);
    auto rel = [](double a, double b) {
      const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
      return std::abs(a - b) / scale;
    };
    double worst = std::max(rel(x.ym, y.ym), rel(x.l2_lambda_f, y.l2_lambda_f));
    double eig_scale = 1e-12;
    for (const auto& e : y.eigenvalues) eig_scale = std::max(eig_scale, e.cwiseAbs().maxCoeff());
    for (size_t s = 0; s < sample_sites.size(); ++s) {
      worst = std::max(worst, (x.eigenvalues[s] - y.eigenvalues[s]).cwiseAbs().maxCoeff() / eig_scale);
    }
    out.push_back(worst);
  }
  return out;
}

}  // namespace hymflow

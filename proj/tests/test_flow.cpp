#include <doctest.h>

#include "hymflow/flow.hpp"
#include "support.hpp"

using namespace test;

namespace {

BundleState conformal_bundle(const GridGeometry& g, double amplitude, int mode) {
  BundleSpec s;
  s.kind = BundleKind::conformal_line;
  s.amplitude = amplitude;
  s.mode = mode;
  return make_test_bundle(g, s);
}

double phi_norm(const BundleState& b, const MetricField& m) {
  const Eigen::ArrayXd phi = log_hermitian(b.H).entry(0, 0).real();
  return std::sqrt(integrate(Eigen::ArrayXd(phi.square()), m));
}

}  // namespace

TEST_CASE("CFL time step and its limits") {
  const GridGeometry g = build_torus_geometry(1, 16);
  const MetricField m = make_test_metric(g, MetricKind::kahler_flat, 0.0);
  CHECK(cfl_timestep(m, 0.1) == doctest::Approx(0.1 / 256.0 / 4.0).epsilon(1e-14));
  CHECK(max_stable_cfl(Scheme::rk4) > max_stable_cfl(Scheme::euler));

  FlowConfig c;
  c.t_end = 0.01;
  c.dt = 2.0 * max_stable_cfl(Scheme::rk4) * cfl_timestep(m, 1.0);
  try {
    plan_steps(c, m);
    FAIL("unstable dt accepted");
  } catch (const FlowAborted& e) {
    CHECK(e.kind() == FlowFailure::cfl_violation);
  }
  c.dt = 0.0;
  c.cfl = 0.3;
  const StepPlan p = plan_steps(c, m);
  CHECK(p.steps * p.dt == doctest::Approx(c.t_end).epsilon(1e-14));
  CHECK(p.dt <= 0.3 * cfl_timestep(m, 1.0) * (1.0 + 1e-12));
}

TEST_CASE("scheme names round-trip") {
  CHECK(parse_scheme("rk4") == Scheme::rk4);
  CHECK(parse_scheme("euler") == Scheme::euler);
  CHECK(to_string(Scheme::euler) == "euler");
  CHECK_THROWS(parse_scheme("rk45"));
}

TEST_CASE("conformal factor decays at the heat-equation rate") {
  // For H = exp(phi) on the flat torus, dphi/dt = -2 i Lambda delbar del phi =
  // Delta phi / 2 (coordinate Laplacian), so mode m decays at 2 pi^2 |k|^2 = (2 pi m)^2.
  const GridGeometry g = build_torus_geometry(1, 16);
  const MetricField m = make_test_metric(g, MetricKind::kahler_flat, 0.0);
  for (int mode : {1, 2}) {
    CAPTURE(mode);
    const BundleState b = conformal_bundle(g, 1e-3, mode);
    FlowConfig c;
    c.t_end = 0.01;
    c.cfl = 0.4;
    Trajectory<BundleState> traj;
    integrate(b, c, m, 0.0, traj);
    const double rate =
        -std::log(phi_norm(traj.states.back(), m) / phi_norm(traj.states.front(), m)) / c.t_end;
    const double exact = 4.0 * pi * pi * mode * mode;
    CHECK(rate == doctest::Approx(exact).epsilon(1e-3));
  }
}

TEST_CASE("trajectory storage and observer cadence") {
  const GridGeometry g = build_torus_geometry(1, 8);
  const MetricField m = make_test_metric(g, MetricKind::kahler_flat, 0.0);
  FlowConfig c;
  c.t_end = 0.01;
  c.cfl = 0.3;
  c.record_every = 4;
  c.checkpoint_every = 5;
  const StepPlan plan = plan_steps(c, m);
  std::vector<int> seen;
  Trajectory<BundleState> traj;
  integrate(conformal_bundle(g, 0.1, 1), c, m, 0.0, traj,
            [&](int step, double, const BundleState&) { seen.push_back(step); });
  CHECK(seen.front() == 0);
  CHECK(seen.back() == plan.steps);
  CHECK(seen[1] == 4);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(c.t_end).epsilon(1e-14));
  CHECK(std::is_sorted(traj.times.begin(), traj.times.end()));
  CHECK(std::adjacent_find(traj.times.begin(), traj.times.end()) == traj.times.end());
  CHECK(traj.states.size() == static_cast<size_t>(plan.steps / 5 + 1 + (plan.steps % 5 != 0)));
}

TEST_CASE("Hermitian-Einstein states are stationary") {
  const GridGeometry g = build_torus_geometry(2, 8);
  const MetricField m = make_test_metric(g, MetricKind::kahler_flat, 0.0);
  BundleSpec s;
  s.kind = BundleKind::flux_line;
  s.flux = {1, 0};
  const BundleState b = make_test_bundle(g, s);
  const double lambda = degree_slope_lambda(b, m).lambda;
  CHECK(frobenius_sq(metric_flow_rhs(b, m, lambda)).maxCoeff() < 1e-20);
  const FormField v = connection_flow_rhs(to_unitary_frame(g, b), m);
  CHECK(coefficient_norm(g, v) < 1e-10);
}

TEST_CASE("connection-flow velocity equals -D*F - (tau + taubar)*F") {
  const GridGeometry g = build_torus_geometry(1, 32);
  BundleSpec s;
  s.kind = BundleKind::extension;
  s.amplitude = 0.3;
  const ConnectionState c = to_unitary_frame(g, make_test_bundle(g, s));
  for (MetricKind kind : {MetricKind::kahler_flat, MetricKind::kahler_warped,
                          MetricKind::nongauduchon_bump}) {
    CAPTURE(to_string(kind));
    const MetricField m = make_test_metric(g, kind, 0.3);
    CHECK(coefficient_norm(g, connection_flow_rhs(c, m)) > 1e-3);
    CHECK(rhs_cross_check(c, m) < 1e-8);
  }
}

TEST_CASE("gauge link solves sigma^* sigma = H0^{-1} H") {
  const GridGeometry g = build_torus_geometry(1, 8);
  MatrixField H0 = MatrixField::identity(g.sites(), 2);
  H0.entry(0, 1).setConstant(cplx(0.2, 0.1));
  H0.entry(1, 0).setConstant(cplx(0.2, -0.1));
  MatrixField H = H0;
  H.entry(0, 0) += (2.0 * pi * g.coordinate(0)).cos().cast<cplx>() * 0.3;
  const MatrixField s = gauge_link(H, H0);
  // sigma^{*H0} = H0^{-1} sigma^dagger H0, so H0 sigma^{*H0} sigma = sigma^dagger H0 sigma = H.
  const MatrixField lhs = adjoint(s) * H0 * s;
  CHECK((lhs.raw() - H.raw()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("metric flow and connection flow are gauge equivalent") {
  const GridGeometry g = build_torus_geometry(1, 16);
  const MetricField m = make_test_metric(g, MetricKind::kahler_warped, 0.2);
  const BundleState b = conformal_bundle(g, 0.2, 1);
  const std::vector<Index> sites{0, 7, 100, 200};
  FlowConfig c;
  c.t_end = 0.005;
  c.cfl = 0.3;
  c.record_every = 10;
  c.checkpoint_every = 10;
  Trajectory<BundleState> th;
  Trajectory<ConnectionState> ta;
  integrate(b, c, m, 0.0, th);
  integrate(to_unitary_frame(g, b), c, m, ta);
  const auto d = trajectory_equivalence(th, ta, m, sites);
  CHECK(*std::max_element(d.begin(), d.end()) < 1e-8);

  // First-order scheme: the discrepancy is O(dt).
  c.scheme = Scheme::euler;
  std::vector<double> worst;
  for (double cfl : {0.2, 0.1}) {
    c.cfl = cfl;
    Trajectory<BundleState> eh;
    Trajectory<ConnectionState> ea;
    integrate(b, c, m, 0.0, eh);
    integrate(to_unitary_frame(g, b), c, m, ea);
    const auto e = trajectory_equivalence(eh, ea, m, sites);
    worst.push_back(*std::max_element(e.begin(), e.end()));
  }
  CHECK(worst[0] / worst[1] == doctest::Approx(2.0).epsilon(0.1));
}

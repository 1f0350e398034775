#include <doctest.h>

#include "support.hpp"

using namespace test;

namespace {

BundleSpec flux(int k0, int k1 = 0) {
  BundleSpec s;
  s.kind = BundleKind::flux_line;
  s.flux = {k0, k1};
  return s;
}

BundleSpec conformal(double amplitude, int mode = 1) {
  BundleSpec s;
  s.kind = BundleKind::conformal_line;
  s.amplitude = amplitude;
  s.mode = mode;
  return s;
}

BundleSpec extension(double amplitude) {
  BundleSpec s;
  s.kind = BundleKind::extension;
  s.amplitude = amplitude;
  return s;
}

}  // namespace

TEST_CASE("flux line: degree k and constant i Lambda F = 2 pi k / Vol") {
  for (int n : {1, 2}) {
    const GridGeometry g = build_torus_geometry(n, 8);
    const MetricField m = make_test_metric(g, MetricKind::kahler_flat, 0.0);
    for (int k : {-2, 1, 3}) {
      CAPTURE(n);
      CAPTURE(k);
      const BundleState b = make_test_bundle(g, flux(k));
      const DegreeSlope d = degree_slope_lambda(b, m);
      CHECK(d.degree == doctest::Approx(k).epsilon(1e-12));
      CHECK(d.lambda == doctest::Approx(2.0 * pi * k).epsilon(1e-12));
      const MatrixField ilf = cplx(0, 1) * lambda_contract(curvature(g, b), m);
      CHECK(max_abs(ilf.entry(0, 0) - 2.0 * pi * k) < 1e-10);
    }
  }
  // Non-unit periods: the plane area enters the curvature density.
  const GridGeometry g = build_torus_geometry(1, 8, {2.0, 1.5});
  const MetricField m = make_test_metric(g, MetricKind::kahler_flat, 0.0);
  const BundleState b = make_test_bundle(g, flux(1));
  CHECK(degree_slope_lambda(b, m).degree == doctest::Approx(1.0).epsilon(1e-12));
  const MatrixField ilf = cplx(0, 1) * lambda_contract(curvature(g, b), m);
  CHECK(max_abs(ilf.entry(0, 0) - 2.0 * pi / 3.0) < 1e-10);
}

TEST_CASE("direct sum keeps its blocks and adds degrees") {
  const GridGeometry g = build_torus_geometry(1, 8);
  const MetricField m = make_test_metric(g, MetricKind::kahler_warped, 0.2);
  BundleSpec s;
  s.kind = BundleKind::direct_sum;
  s.parts = {flux(1), flux(-1)};
  const BundleState b = make_test_bundle(g, s);
  CHECK(b.rank() == 2);
  CHECK(degree_slope_lambda(b, m).degree == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(block_leakage(curvature(g, b), b.fluxes) == 0.0);
}

TEST_CASE("conformal line: F = delbar del phi against the analytic second derivative") {
  // phi = A cos(2 pi m x): F = pi^2 m^2 A cos(2 pi m x) dz ^ dzbar.
  const GridGeometry g = build_torus_geometry(1, 64);
  const double A = 0.4;
  const int mode = 2;
  const BundleState b = make_test_bundle(g, conformal(A, mode));
  const FormField F = curvature(g, b);
  const Eigen::ArrayXd expected = pi * pi * mode * mode * A * (2.0 * pi * mode * g.coordinate(0)).cos();
  CHECK(max_abs(F[0b11].entry(0, 0) - expected.cast<cplx>()) < 1e-10);
  CHECK(F.masks().size() == 1);
}

TEST_CASE("Chern connection is metric compatible") {
  for (int n : {1, 2}) {
    const GridGeometry g = build_torus_geometry(n, n == 1 ? 32 : 16);
    for (const BundleSpec& s : {conformal(0.4), extension(0.3)}) {
      CAPTURE(n);
      CAPTURE(to_string(s.kind));
      const BundleState b = make_test_bundle(g, s);
      // exp(phi) is not band-limited; n = 2 at N = 16 resolves it to ~1e-7.
      CHECK(compatibility_residual(g, b, 3, 7) < (n == 1 ? 1e-10 : 1e-6));
    }
  }
}

TEST_CASE("integrability is enforced") {
  const GridGeometry g = build_torus_geometry(2, 8);
  const BundleState b = make_test_bundle(g, extension(0.3));
  CHECK(integrability_residual(g, b.a) < integrability_tolerance());
  const FormField generic = smooth_form(g, 2, 1).part(0, 1);
  CHECK(integrability_residual(g, generic) > 1e-2);
}

TEST_CASE("unitary-frame curvature is skew-Hermitian") {
  const GridGeometry g = build_torus_geometry(2, 8);
  const ConnectionState c = to_unitary_frame(g, make_test_bundle(g, extension(0.3)));
  const FormField F = curvature(g, c);
  CHECK(coefficient_norm(g, F + form_adjoint(F)) < 1e-12 * (1.0 + coefficient_norm(g, F)));
}

TEST_CASE("unitary gauge transformations preserve |F|") {
  const GridGeometry g = build_torus_geometry(1, 64);
  const MetricField m = make_test_metric(g, MetricKind::kahler_warped, 0.2);
  const ConnectionState c = to_unitary_frame(g, make_test_bundle(g, extension(0.3)));
  // sigma = exp(i theta(x) diag(1, -1)) is unitary and respects the equal-flux blocks.
  const Eigen::ArrayXd theta = 0.7 * (2.0 * pi * g.coordinate(1)).sin();
  MatrixField sigma(g.sites(), 2);
  sigma.entry(0, 0) = (cplx(0, 1) * theta.cast<cplx>()).exp();
  sigma.entry(1, 1) = (cplx(0, -1) * theta.cast<cplx>()).exp();
  const ConnectionState d = gauge_act(g, sigma, c);
  const Eigen::ArrayXd e0 = pointwise_norm_sq(curvature(g, c), m);
  const Eigen::ArrayXd e1 = pointwise_norm_sq(curvature(g, d), m);
  CHECK((e0 - e1).abs().maxCoeff() < 1e-9 * (1.0 + e0.maxCoeff()));
}

TEST_CASE("gauge transformations may not mix blocks of different flux") {
  const GridGeometry g = build_torus_geometry(1, 8);
  BundleSpec s;
  s.kind = BundleKind::direct_sum;
  s.parts = {flux(1), flux(-1)};
  const ConnectionState c = to_unitary_frame(g, make_test_bundle(g, s));
  MatrixField sigma = MatrixField::identity(g.sites(), 2);
  sigma.entry(0, 1).setConstant(0.1);
  CHECK_THROWS_AS(gauge_act(g, sigma, c), std::invalid_argument);
}

TEST_CASE("codifferential is the L2 adjoint of the covariant derivative") {
  const GridGeometry g = build_torus_geometry(2, 8);
  const ConnectionState c = to_unitary_frame(g, make_test_bundle(g, extension(0.3)));
  const FormField A = connection_form(c);
  const FormField beta = smooth_form(g, 2, 1, 0.2);
  const FormField X = smooth_form(g, 2, 2, 0.5);
  for (MetricKind kind : {MetricKind::kahler_warped, MetricKind::gauduchon_nonkahler,
                          MetricKind::nongauduchon_bump}) {
    const MetricField m = make_test_metric(g, kind, 0.3);
    for (Part part : {Part::full, Part::holomorphic, Part::antiholomorphic}) {
      CAPTURE(to_string(kind));
      const cplx lhs = integrate(pointwise_inner(covariant_derivative(g, A, beta, part), X, m), m);
      const cplx rhs = integrate(pointwise_inner(beta, codifferential(A, X, m, part), m), m);
      CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
    }
  }
}

TEST_CASE("twisted Kahler identities hold on F_A") {
  const GridGeometry g = build_torus_geometry(1, 32);
  const ConnectionState c = to_unitary_frame(g, make_test_bundle(g, extension(0.3)));
  for (MetricKind kind : {MetricKind::kahler_flat, MetricKind::kahler_warped,
                          MetricKind::nongauduchon_bump}) {
    CAPTURE(to_string(kind));
    const MetricField m = make_test_metric(g, kind, 0.3);
    CHECK(adjoint_identity_check(c, m).worst() < 1e-8);
  }
}

#pragma once

#include <map>
#include <string>
#include <utility>

#include "hymflow/fields.hpp"
#include "hymflow/grid.hpp"

namespace hymflow {

/// Hermitian metric g_{jk} on the torus, with fundamental form
/// omega = (i/2) g_{jk} dz^j ^ dzbar^k. This normalization gives
/// Lambda omega = n and dV = det(g) dx, so the unit flat torus has volume 1.
struct MetricField {
  GridGeometry grid;
  MatrixField g;
  MatrixField g_inv;
  /// dV = det_g dx^1 ... dx^{2n}.
  Eigen::ArrayXd det_g;
  /// Hermitian inner products <letter_a, letter_b> of the coframe.
  MatrixField letter_gram;

  /// <e_I, e_J> for basis forms of equal bidegree; zero otherwise.
  const Eigen::ArrayXcd& form_gram(FormMask a, FormMask b) const;
  bool has_gram(FormMask a, FormMask b) const;

  std::map<std::pair<FormMask, FormMask>, Eigen::ArrayXcd> gram;
};

/// Validates positivity and precomputes inverse, determinant, and form Grams.
MetricField make_metric(const GridGeometry& grid, MatrixField g);

enum class MetricKind { kahler_flat, kahler_warped, gauduchon_nonkahler, nongauduchon_bump };

MetricKind parse_metric_kind(const std::string& name);
std::string to_string(MetricKind kind);

/// Test metrics. gauduchon_nonkahler (n = 2) adds
/// amplitude * (f dz1^dzbar2 + conj(f) dz2^dzbar1) with f a function of z1
/// only, which is del-delbar closed but not closed. nongauduchon_bump is a
/// conformal bump violating the Gauduchon condition for n = 2.
MetricField make_test_metric(const GridGeometry& grid, MetricKind kind, double amplitude);

// Pointwise and integrated inner products. Values use tr(a b^dagger).
Eigen::ArrayXcd pointwise_inner(const FormField& a, const FormField& b, const MetricField& metric);
Eigen::ArrayXd pointwise_norm_sq(const FormField& a, const MetricField& metric);
/// Integral of a density against dV.
double integrate(const Eigen::ArrayXd& density, const MetricField& metric);
cplx integrate(const Eigen::ArrayXcd& density, const MetricField& metric);
double l2_norm(const FormField& a, const MetricField& metric);
double volume(const MetricField& metric);

/// e_{full} = dz^1 ^ .. ^ dz^n ^ dzbar^1 ^ .. ^ dzbar^n = factor * dx^1 ^ .. ^ dx^{2n}.
cplx top_form_factor(int n);
/// Integral of the trace of the top-degree component of a form over the torus.
cplx integrate_top_form(const GridGeometry& grid, const FormField& form);

/// The fundamental form omega.
FormField fundamental_form(const MetricField& metric);

struct WedgePower {
  FormField form;           ///< omega^k / k!
  Eigen::ArrayXd density;   ///< coefficient of dx^1...dx^{2n}, filled when k = n
};

/// omega^k / k!; for k = n also the volume density. Throws for k outside [0, n].
WedgePower wedge_power_volume(const MetricField& metric, int k);

/// Contraction with omega on (1,1)-forms: Lambda phi = -2i g^{kj} phi_{j kbar}.
/// Throws std::invalid_argument if phi has non-(1,1) components.
MatrixField lambda_contract(const FormField& phi, const MetricField& metric);

/// Lambda on forms of any degree, realized as the pointwise adjoint of omega ^.
FormField lambda_adjoint(const FormField& form, const MetricField& metric);

/// Complex-linear Hodge star: alpha ^ *beta = <alpha, conj(beta)> dV.
FormField hodge_star(const FormField& form, const MetricField& metric);

/// tau^* F (kind = antiholomorphic, built from delbar omega^{n-1}) or
/// taubar^* F (kind = holomorphic), for a 2-form F.
FormField torsion_adjoint(const FormField& F, const MetricField& metric, Dolbeault kind);
/// (tau^* + taubar^*) F.
FormField torsion_adjoint_apply(const FormField& F, const MetricField& metric);

struct MetricConditions {
  double gauduchon_residual = 0.0;  ///< || del delbar omega^{n-1} ||
  double astheno_residual = 0.0;    ///< || del delbar omega^{n-2} ||
  double kahler_residual = 0.0;     ///< || d omega ||
  double omega_norm = 0.0;          ///< || omega ||
};

MetricConditions metric_condition_check(const MetricField& metric);

}  // namespace hymflow

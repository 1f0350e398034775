#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hymflow/fields.hpp"
#include "hymflow/geometry.hpp"
#include "hymflow/grid.hpp"

namespace hymflow {

/// First Chern numbers of a line block on each complex coordinate plane
/// (only entry 0 is used for n = 1).
using PlaneFluxes = std::array<int, 2>;

/// Holomorphic bundle in a fixed smooth frame. Frame index i carries a line
/// block with flux fluxes[i]; its constant-curvature background connection is
/// kept analytic and never stored on the lattice. Entries of a, H, and gauge
/// transformations between frame indices of different flux must vanish.
struct BundleState {
  FormField a;                      ///< A^{0,1}, endomorphism-valued (0,1)-form
  std::vector<PlaneFluxes> fluxes;  ///< one entry per frame index
  MatrixField H;                    ///< bundle metric, <s, t>_H = t^dagger H s
  MatrixField H0;                   ///< reference metric

  int rank() const { return static_cast<int>(fluxes.size()); }
};

/// Unitary connection for H0, stored by its (0,1)-part in an H0-unitary frame,
/// so A^{1,0} = -a^dagger there.
struct ConnectionState {
  FormField a;
  std::vector<PlaneFluxes> fluxes;
  MatrixField H0;  ///< bookkeeping: the metric that defined the unitary frame

  int rank() const { return static_cast<int>(fluxes.size()); }
};

enum class BundleKind { trivial_line, conformal_line, flux_line, direct_sum, extension };

BundleKind parse_bundle_kind(const std::string& name);
std::string to_string(BundleKind kind);

struct BundleSpec {
  BundleKind kind = BundleKind::trivial_line;
  PlaneFluxes flux{0, 0};         ///< flux_line, and both blocks of an extension
  double amplitude = 0.0;         ///< conformal_line: phi amplitude; extension: class size
  int mode = 1;                   ///< Fourier mode of phi or of the exact part of the class
  std::vector<BundleSpec> parts;  ///< direct_sum summands
};

/// Builds a test bundle with H0 = H. Throws std::invalid_argument on
/// unsupported combinations and std::domain_error when integrability fails.
BundleState make_test_bundle(const GridGeometry& grid, const BundleSpec& spec);

/// Constant (1,1) curvature of the flux backgrounds, diagonal in the frame.
FormField flux_background(const GridGeometry& grid, const std::vector<PlaneFluxes>& fluxes);

/// Largest entry coupling frame indices of different flux.
double block_leakage(const MatrixField& m, const std::vector<PlaneFluxes>& fluxes);
double block_leakage(const FormField& f, const std::vector<PlaneFluxes>& fluxes);

/// Relative integrability residual ||delbar a + a ^ a|| / (1 + ||a||^2).
double integrability_residual(const GridGeometry& grid, const FormField& a);
double integrability_tolerance();

/// theta = A^{1,0} of the Chern connection of (delbar + a, H), periodic part.
FormField chern_connection(const GridGeometry& grid, const BundleState& bundle);

/// Curvature of d + A for a periodic connection form A, plus the flux background.
FormField curvature_of(const GridGeometry& grid, const FormField& A,
                       const std::vector<PlaneFluxes>& fluxes);
/// Chern curvature F_H.
FormField curvature(const GridGeometry& grid, const BundleState& bundle);

/// Metric compatibility d<s,t>_H = <Ds,t>_H + <s,Dt>_H on random band-limited
/// sections; returns the worst relative residual.
double compatibility_residual(const GridGeometry& grid, const BundleState& bundle, int trials,
                              std::uint64_t seed);

struct DegreeSlope {
  double degree = 0.0;
  double slope = 0.0;
  double lambda = 0.0;
};

/// deg = int (i/2pi) tr F ^ omega^{n-1}/(n-1)!, slope = deg / r, lambda = 2 pi slope / Vol.
DegreeSlope degree_slope_lambda(const FormField& F, int rank, const MetricField& metric);
DegreeSlope degree_slope_lambda(const BundleState& bundle, const MetricField& metric);

/// Chern connection of (delbar + a, H0) written in the H0-unitary frame H0^{1/2}.
ConnectionState to_unitary_frame(const GridGeometry& grid, const BundleState& bundle);

/// A = a - a^dagger (periodic part).
FormField connection_form(const ConnectionState& state);
FormField curvature(const GridGeometry& grid, const ConnectionState& state);

/// Complex gauge action on the holomorphic and antiholomorphic parts. sigma is
/// given in the original frame of H0 and converted internally. Throws
/// std::domain_error if sigma is singular somewhere.
ConnectionState gauge_act(const GridGeometry& grid, const MatrixField& sigma,
                          const ConnectionState& state);

enum class Part { full, holomorphic, antiholomorphic };

/// D_A, del_A or delbar_A on endomorphism-valued forms: d X + [A ^ X].
FormField covariant_derivative(const GridGeometry& grid, const FormField& A, const FormField& X,
                               Part part = Part::full);

/// Formal L2 adjoint of covariant_derivative for a unitary A: -* D_A *, with
/// del-part and delbar-part adjoints swapped by the complex-linear star.
FormField codifferential(const FormField& A, const FormField& X, const MetricField& metric,
                         Part part = Part::full);

struct AdjointIdentity {
  double antiholomorphic = 0.0;  ///< delbar*_A = -i[Lambda, del_A] - taubar*
  double holomorphic = 0.0;      ///< del*_A = i[Lambda, delbar_A] - tau*
  double worst() const { return std::max(antiholomorphic, holomorphic); }
};

/// Relative L2 residuals of the twisted Kahler identities applied to F_A.
AdjointIdentity adjoint_identity_check(const ConnectionState& state, const MetricField& metric);

}  // namespace hymflow

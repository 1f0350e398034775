#include "hymflow/bundle.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace hymflow {

namespace {

constexpr cplx I(0.0, 1.0);
constexpr double pi = std::numbers::pi;

FormField zero_01(const GridGeometry& grid, int rank) {
  FormField a(grid.n, grid.sites(), rank);
  for (int j = 0; j < grid.n; ++j) a.component(antiholo_letter(grid.n, j));
  return a;
}

Eigen::ArrayXd plane_wave_phase(const GridGeometry& grid, int axis, int mode) {
  return 2.0 * pi * mode * grid.coordinate(axis) / grid.periods[axis];
}

// Places a rank-k block at frame offset `at`.
void place_block(MatrixField& dst, const MatrixField& src, int at) {
  for (int i = 0; i < src.dim(); ++i)
    for (int j = 0; j < src.dim(); ++j) dst.entry(at + i, at + j) = src.entry(i, j);
}

void place_block(FormField& dst, const FormField& src, int at) {
  for (FormMask m : src.masks()) place_block(dst.component(m), src[m], at);
}

BundleState build(const GridGeometry& grid, const BundleSpec& spec) {
  const int n = grid.n;
  const Index S = grid.sites();
  BundleState b;
  auto plane_fluxes = [&] {
    PlaneFluxes f = spec.flux;
    if (n == 1) f[1] = 0;
    return f;
  };

  switch (spec.kind) {
    case BundleKind::trivial_line:
      b.fluxes = {PlaneFluxes{0, 0}};
      b.a = zero_01(grid, 1);
      b.H = MatrixField::identity(S, 1);
      break;
    case BundleKind::conformal_line: {
      Eigen::ArrayXd phi = plane_wave_phase(grid, 0, spec.mode).cos();
      if (n == 2) phi += 0.5 * plane_wave_phase(grid, 2, spec.mode).cos();
      phi *= spec.amplitude;
      b.fluxes = {PlaneFluxes{0, 0}};
      b.a = zero_01(grid, 1);
      b.H = MatrixField::scalar(phi.exp().cast<cplx>());
      break;
    }
    case BundleKind::flux_line:
      b.fluxes = {plane_fluxes()};
      b.a = zero_01(grid, 1);
      b.H = MatrixField::identity(S, 1);
      break;
    case BundleKind::extension: {
      // Nilpotent a with a delbar-closed class: a constant dzbar^1 part (not
      // exact on the torus) plus delbar of a smooth function.
      b.fluxes = {plane_fluxes(), plane_fluxes()};
      b.a = zero_01(grid, 2);
      const Eigen::ArrayXcd f =
          plane_wave_phase(grid, 0, spec.mode).sin().cast<cplx>() / (pi * spec.mode);
      for (int j = 0; j < n; ++j) {
        Eigen::ArrayXcd beta = letter_derivative(grid, f, n + j);
        if (j == 0) beta += 1.0;
        b.a.component(antiholo_letter(n, j)).entry(0, 1) = spec.amplitude * beta;
      }
      b.H = MatrixField::identity(S, 2);
      break;
    }
    case BundleKind::direct_sum: {
      if (spec.parts.empty()) throw std::invalid_argument("direct_sum needs at least one summand");
      std::vector<BundleState> parts;
      int rank = 0;
      for (const auto& p : spec.parts) {
        parts.push_back(build(grid, p));
        rank += parts.back().rank();
      }
      b.a = zero_01(grid, rank);
      b.H = MatrixField(S, rank);
      int at = 0;
      for (const auto& p : parts) {
        place_block(b.a, p.a, at);
        place_block(b.H, p.H, at);
        b.fluxes.insert(b.fluxes.end(), p.fluxes.begin(), p.fluxes.end());
        at += p.rank();
      }
      break;
    }
  }
  b.H0 = b.H;
  return b;
}

double relative(double diff, double scale) { return scale > 0.0 ? diff / scale : diff; }

// Band-limited random section: a few low modes with Gaussian coefficients.
Eigen::ArrayXXcd random_section(const GridGeometry& grid, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  // Keep products of two sections with the metric well inside the band.
  const int top = std::max(1, grid.N / 16);
  std::uniform_int_distribution<int> mode(-top, top);
  Eigen::ArrayXXcd s = Eigen::ArrayXXcd::Zero(grid.sites(), rank);
  for (int i = 0; i < rank; ++i) {
    for (int term = 0; term < 4; ++term) {
      Eigen::ArrayXd phase = Eigen::ArrayXd::Zero(grid.sites());
      for (int axis = 0; axis < grid.real_dim(); ++axis) {
        phase += plane_wave_phase(grid, axis, mode(rng));
      }
      const cplx c(normal(rng), normal(rng));
      s.col(i) += c * (I * phase.cast<cplx>()).exp();
    }
  }
  return s;
}

// Per-site m * s for a matrix field and a section.
Eigen::ArrayXXcd apply(const MatrixField& m, const Eigen::ArrayXXcd& s) {
  Eigen::ArrayXXcd out = Eigen::ArrayXXcd::Zero(s.rows(), s.cols());
  if (m.empty()) return out;
  for (int i = 0; i < m.dim(); ++i)
    for (int k = 0; k < m.dim(); ++k) out.col(i) += m.entry(i, k) * s.col(k);
  return out;
}

// t^dagger H s per site.
Eigen::ArrayXcd pairing(const MatrixField& H, const Eigen::ArrayXXcd& s, const Eigen::ArrayXXcd& t) {
  return (t.conjugate() * apply(H, s)).rowwise().sum();
}

double l2(const GridGeometry& grid, const FormField& f) { return coefficient_norm(grid, f); }

}  // namespace

BundleKind parse_bundle_kind(const std::string& name) {
  if (name == "trivial_line") return BundleKind::trivial_line;
  if (name == "conformal_line") return BundleKind::conformal_line;
  if (name == "flux_line") return BundleKind::flux_line;
  if (name == "direct_sum") return BundleKind::direct_sum;
  if (name == "extension") return BundleKind::extension;
  throw std::invalid_argument("unknown bundle kind '" + name + "'");
}

std::string to_string(BundleKind kind) {
  switch (kind) {
    case BundleKind::trivial_line: return "trivial_line";
    case BundleKind::conformal_line: return "conformal_line";
    case BundleKind::flux_line: return "flux_line";
    case BundleKind::direct_sum: return "direct_sum";
    case BundleKind::extension: return "extension";
  }
  return "?";
}

BundleState make_test_bundle(const GridGeometry& grid, const BundleSpec& spec) {
  if (spec.mode < 1) throw std::invalid_argument("bundle mode must be positive");
  BundleState b = build(grid, spec);
  if (min_eigenvalue(b.H).minCoeff() <= 0.0) {
    throw std::invalid_argument("bundle metric is not positive definite");
  }
  const double resid = integrability_residual(grid, b.a);
  if (resid > integrability_tolerance()) {
    throw std::domain_error("holomorphic structure is not integrable (residual " +
                            std::to_string(resid) + ")");
  }
  return b;
}

FormField flux_background(const GridGeometry& grid, const std::vector<PlaneFluxes>& fluxes) {
  const int n = grid.n;
  const int r = static_cast<int>(fluxes.size());
  FormField F(n, grid.sites(), r);
  for (int j = 0; j < n; ++j) {
    const double area = grid.periods[2 * j] * grid.periods[2 * j + 1];
    MatrixField& c = F.component(holo_letter(n, j) | antiholo_letter(n, j));
    // (i/2pi) pi k dz^dzbar = k dx^dy / area per unit of flux.
    for (int b = 0; b < r; ++b) c.entry(b, b).setConstant(pi * fluxes[b][j] / area);
  }
  return F;
}

double block_leakage(const MatrixField& m, const std::vector<PlaneFluxes>& fluxes) {
  double worst = 0.0;
  if (m.empty()) return worst;
  const int r = m.dim();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (fluxes[i] != fluxes[j]) worst = std::max(worst, m.entry(i, j).abs().maxCoeff());
  return worst;
}

double block_leakage(const FormField& f, const std::vector<PlaneFluxes>& fluxes) {
  double worst = 0.0;
  for (FormMask m : f.masks()) worst = std::max(worst, block_leakage(f[m], fluxes));
  return worst;
}

double integrability_tolerance() { return 1e-8; }

double integrability_residual(const GridGeometry& grid, const FormField& a) {
  const FormField r = dolbeault_derivative(grid, a, Dolbeault::antiholomorphic) + wedge(a, a);
  const double na = l2(grid, a);
  return l2(grid, r) / (1.0 + na * na);
}

FormField chern_connection(const GridGeometry& grid, const BundleState& bundle) {
  const MatrixField Hinv = inverse(bundle.H);
  FormField theta =
      dolbeault_derivative(grid, zero_form_field(grid.n, bundle.H), Dolbeault::holomorphic);
  theta -= right_multiply(form_adjoint(bundle.a), bundle.H);
  return left_multiply(Hinv, theta);
}

FormField curvature_of(const GridGeometry& grid, const FormField& A,
                       const std::vector<PlaneFluxes>& fluxes) {
  FormField F = exterior_derivative(grid, A);
  F += wedge(A, A);
  F += flux_background(grid, fluxes);
  return F;
}

FormField curvature(const GridGeometry& grid, const BundleState& bundle) {
  return curvature_of(grid, chern_connection(grid, bundle) + bundle.a, bundle.fluxes);
}

double compatibility_residual(const GridGeometry& grid, const BundleState& bundle, int trials,
                              std::uint64_t seed) {
  const int n = grid.n;
  const int r = bundle.rank();
  const FormField A = chern_connection(grid, bundle) + bundle.a;
  std::mt19937_64 rng(seed);
  auto covariant = [&](const Eigen::ArrayXXcd& s, int letter) {
    Eigen::ArrayXXcd d(s.rows(), s.cols());
    for (int i = 0; i < r; ++i) d.col(i) = letter_derivative(grid, Eigen::ArrayXcd(s.col(i)), letter);
    return Eigen::ArrayXXcd(d + apply(A[1u << letter], s));
  };
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::ArrayXXcd s = random_section(grid, r, rng);
    const Eigen::ArrayXXcd t = random_section(grid, r, rng);
    const Eigen::ArrayXcd inner = pairing(bundle.H, s, t);
    for (int letter = 0; letter < 2 * n; ++letter) {
      const int conj = letter < n ? letter + n : letter - n;
      const Eigen::ArrayXcd lhs = letter_derivative(grid, inner, letter);
      const Eigen::ArrayXcd rhs =
          pairing(bundle.H, covariant(s, letter), t) + pairing(bundle.H, s, covariant(t, conj));
      const double scale = std::max(lhs.abs().maxCoeff(), rhs.abs().maxCoeff());
      worst = std::max(worst, relative((lhs - rhs).abs().maxCoeff(), scale));
    }
  }
  return worst;
}

DegreeSlope degree_slope_lambda(const FormField& F, int rank, const MetricField& metric) {
  const int n = metric.grid.n;
  const FormField top = wedge(F, wedge_power_volume(metric, n - 1).form);
  DegreeSlope d;
  d.degree = (I / (2.0 * pi) * integrate_top_form(metric.grid, top)).real();
  d.slope = d.degree / rank;
  d.lambda = 2.0 * pi * d.slope / volume(metric);
  return d;
}

DegreeSlope degree_slope_lambda(const BundleState& bundle, const MetricField& metric) {
  return degree_slope_lambda(curvature(metric.grid, bundle), bundle.rank(), metric);
}

ConnectionState to_unitary_frame(const GridGeometry& grid, const BundleState& bundle) {
  const MatrixField g0 = sqrt_hermitian(bundle.H0);
  const MatrixField g0inv = inverse(g0);
  FormField a = right_multiply(left_multiply(g0, bundle.a), g0inv);
  a -= right_multiply(
      dolbeault_derivative(grid, zero_form_field(grid.n, g0), Dolbeault::antiholomorphic), g0inv);
  return ConnectionState{std::move(a), bundle.fluxes, bundle.H0};
}

FormField connection_form(const ConnectionState& state) {
  return state.a - form_adjoint(state.a);
}

FormField curvature(const GridGeometry& grid, const ConnectionState& state) {
  return curvature_of(grid, connection_form(state), state.fluxes);
}

ConnectionState gauge_act(const GridGeometry& grid, const MatrixField& sigma,
                          const ConnectionState& state) {
  if (block_leakage(sigma, state.fluxes) > 0.0) {
    throw std::invalid_argument("gauge transformation mixes blocks of different flux");
  }
  const MatrixField g0 = sqrt_hermitian(state.H0);
  const MatrixField s = g0 * sigma * inverse(g0);
  const MatrixField sinv = inverse(s);
  if (!sinv.raw().allFinite()) throw std::domain_error("gauge transformation is singular");
  // delbar_{sigma(A)} = sigma o delbar_A o sigma^{-1}.
  FormField a = right_multiply(left_multiply(s, state.a), sinv);
  a -= right_multiply(
      dolbeault_derivative(grid, zero_form_field(grid.n, s), Dolbeault::antiholomorphic), sinv);
  return ConnectionState{std::move(a), state.fluxes, state.H0};
}

FormField covariant_derivative(const GridGeometry& grid, const FormField& A, const FormField& X,
                               Part part) {
  FormField out;
  switch (part) {
    case Part::full:
      out = exterior_derivative(grid, X);
      out += graded_commutator(A, X);
      break;
    case Part::holomorphic:
      out = dolbeault_derivative(grid, X, Dolbeault::holomorphic);
      out += graded_commutator(A.part(1, 0), X);
      break;
    case Part::antiholomorphic:
      out = dolbeault_derivative(grid, X, Dolbeault::antiholomorphic);
      out += graded_commutator(A.part(0, 1), X);
      break;
  }
  return out;
}

FormField codifferential(const FormField& A, const FormField& X, const MetricField& metric,
                         Part part) {
  // The complex-linear star maps (p,q) to (n-q, n-p), so the adjoint of
  // delbar_A is -* del_A * and vice versa.
  Part inner = part;
  if (part == Part::holomorphic) inner = Part::antiholomorphic;
  if (part == Part::antiholomorphic) inner = Part::holomorphic;
  FormField out =
      hodge_star(covariant_derivative(metric.grid, A, hodge_star(X, metric), inner), metric);
  return out *= -1.0;
}

AdjointIdentity adjoint_identity_check(const ConnectionState& state, const MetricField& metric) {
  const GridGeometry& grid = metric.grid;
  const FormField A = connection_form(state);
  const FormField F = curvature(grid, state);
  const FormField lambda_f = zero_form_field(grid.n, lambda_contract(F, metric));

  // [Lambda, D] F = Lambda D F - D Lambda F.
  auto bracket = [&](Part part) {
    return lambda_adjoint(covariant_derivative(grid, A, F, part), metric) -
           covariant_derivative(grid, A, lambda_f, part);
  };
  auto rel = [&](const FormField& lhs, const FormField& rhs) {
    const double scale = std::max(l2_norm(lhs, metric), l2_norm(rhs, metric));
    return relative(l2_norm(lhs - rhs, metric), scale);
  };

  AdjointIdentity out;
  {
    const FormField lhs = codifferential(A, F, metric, Part::antiholomorphic);
    FormField rhs = -I * bracket(Part::holomorphic);
    rhs -= torsion_adjoint(F, metric, Dolbeault::holomorphic);
    out.antiholomorphic = rel(lhs, rhs);
  }
  {
    const FormField lhs = codifferential(A, F, metric, Part::holomorphic);
    FormField rhs = I * bracket(Part::antiholomorphic);
    rhs -= torsion_adjoint(F, metric, Dolbeault::antiholomorphic);
    out.holomorphic = rel(lhs, rhs);
  }
  return out;
}

}  // namespace hymflow

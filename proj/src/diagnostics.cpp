#include "hymflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hymflow {

namespace {

constexpr cplx I(0.0, 1.0);

Eigen::ArrayXd ball_indicator(const GridGeometry& grid, const std::vector<double>& x0, double r) {
  return (grid.distance_sq(x0) <= r * r).cast<double>();
}

double sup_frobenius(const MatrixField& m) {
  return std::sqrt(std::max(0.0, frobenius_sq(m).maxCoeff()));
}

void check_point(const GridGeometry& grid, const std::vector<double>& x0) {
  if (static_cast<int>(x0.size()) != grid.real_dim()) {
    throw std::invalid_argument("base point needs " + std::to_string(grid.real_dim()) +
                                " coordinates");
  }
}

// Index of a stored time, within a relative tolerance.
size_t stored_index(const std::vector<double>& times, double t) {
  for (size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return k;
  }
  throw std::invalid_argument("time " + std::to_string(t) + " is not a stored time");
}

// Trapezoid of samples h over the window [a, b] of a sampled function,
// with linear interpolation at the window ends.
double windowed_trapezoid(const std::vector<double>& t, const std::vector<double>& h, double a,
                          double b) {
  double sum = 0.0;
  for (size_t k = 0; k + 1 < t.size(); ++k) {
    const double lo = std::max(a, t[k]);
    const double hi = std::min(b, t[k + 1]);
    if (hi <= lo) continue;
    const double span = t[k + 1] - t[k];
    auto at = [&](double s) { return h[k] + (h[k + 1] - h[k]) * (s - t[k]) / span; };
    sum += 0.5 * (hi - lo) * (at(lo) + at(hi));
  }
  return sum;
}

}  // namespace

const std::vector<std::string>& DiagnosticsRecord::field_names() {
  static const std::vector<std::string> names{
      "t",        "ym",          "dtA_l2sq",     "sup_lambda_f",       "l2_lambda_f",
      "i_func",   "he_resid",    "torsion_pair", "energy_ident_resid", "integrability_resid"};
  return names;
}

std::vector<double> DiagnosticsRecord::values() const {
  return {t,      ym,       dtA_l2sq,     sup_lambda_f,       l2_lambda_f,
          i_func, he_resid, torsion_pair, energy_ident_resid, integrability_resid};
}

ConnectionState unitary_connection(const GridGeometry& grid, const BundleState& bundle) {
  BundleState b = bundle;
  b.H0 = bundle.H;
  return to_unitary_frame(grid, b);
}

DiagnosticsRecord flow_observables(const ConnectionState& state, const MetricField& metric,
                                   double lambda, double t, TorsionPairing* pairing) {
  const GridGeometry& grid = metric.grid;
  const FormField A = connection_form(state);
  const FormField F = curvature_of(grid, A, state.fluxes);
  const MatrixField lf = lambda_contract(F, metric);
  const FormField dlf = covariant_derivative(grid, A, zero_form_field(grid.n, lf));
  const FormField dtA = connection_flow_rhs(state, metric);

  DiagnosticsRecord r;
  r.t = t;
  r.ym = integrate(pointwise_norm_sq(F, metric), metric);
  r.dtA_l2sq = integrate(pointwise_norm_sq(dtA, metric), metric);
  r.sup_lambda_f = sup_frobenius(lf);
  r.l2_lambda_f = std::sqrt(std::max(0.0, integrate(frobenius_sq(lf), metric)));
  r.i_func = integrate(pointwise_norm_sq(dlf, metric), metric);
  MatrixField resid = I * lf;
  resid -= lambda * MatrixField::identity(grid.sites(), state.rank());
  r.he_resid = sup_frobenius(resid);
  const TorsionPairing tp = torsion_pairing(F, dtA, metric);
  r.torsion_pair = tp.value;
  if (pairing) *pairing = tp;
  r.integrability_resid = integrability_residual(grid, state.a);
  return r;
}

DiagnosticsRecord flow_observables(const BundleState& state, const MetricField& metric,
                                   double lambda, double t, TorsionPairing* pairing) {
  return flow_observables(unitary_connection(metric.grid, state), metric, lambda, t, pairing);
}

Eigen::ArrayXd energy_density(const ConnectionState& state, const MetricField& metric) {
  return pointwise_norm_sq(curvature(metric.grid, state), metric);
}

double i_functional(const ConnectionState& state, const MetricField& metric) {
  const GridGeometry& grid = metric.grid;
  const FormField A = connection_form(state);
  const FormField F = curvature_of(grid, A, state.fluxes);
  const FormField dlf =
      covariant_derivative(grid, A, zero_form_field(grid.n, lambda_contract(F, metric)));
  return integrate(pointwise_norm_sq(dlf, metric), metric);
}

TorsionPairing torsion_pairing(const FormField& F, const FormField& dtA,
                               const MetricField& metric) {
  const FormField tf = torsion_adjoint_apply(F, metric);
  TorsionPairing p;
  p.value = integrate(pointwise_inner(tf, dtA, metric), metric).real();
  const Eigen::ArrayXd mag =
      (pointwise_norm_sq(tf, metric) * pointwise_norm_sq(dtA, metric)).max(0.0).sqrt();
  p.scale = integrate(mag, metric);
  return p;
}

TorsionPairing torsion_pairing(const ConnectionState& state, const MetricField& metric) {
  return torsion_pairing(curvature(metric.grid, state), connection_flow_rhs(state, metric), metric);
}

std::vector<double> energy_identity_residual(std::vector<DiagnosticsRecord>& records) {
  std::vector<double> out;
  if (records.empty()) return out;
  const double ym0 = records.front().ym;
  const double scale = std::max(ym0, 1e-30);
  double dissipated = 0.0;
  for (size_t k = 0; k < records.size(); ++k) {
    if (k > 0) {
      dissipated += (records[k].t - records[k - 1].t) *
                    (records[k].dtA_l2sq + records[k - 1].dtA_l2sq);  // 2 * trapezoid
    }
    const double r = std::abs(records[k].ym + dissipated - ym0) / scale;
    records[k].energy_ident_resid = r;
    out.push_back(r);
  }
  return out;
}

LocalEnergy local_energy_check(const Trajectory<ConnectionState>& traj,
                               const std::vector<DiagnosticsRecord>& records,
                               const MetricField& metric, const std::vector<double>& x0, double R,
                               double s, double tau, double C) {
  const GridGeometry& grid = metric.grid;
  check_point(grid, x0);
  if (!(R > 0.0) || R > 0.5 * grid.injectivity_radius + 1e-12) {
    throw std::invalid_argument("local energy radius must lie in (0, i_X/2]");
  }
  if (records.empty()) throw std::invalid_argument("local energy check needs records");
  const Eigen::ArrayXd es = energy_density(traj.states[stored_index(traj.times, s)], metric);
  const Eigen::ArrayXd et = energy_density(traj.states[stored_index(traj.times, tau)], metric);

  std::vector<double> t, h;
  for (const auto& r : records) {
    t.push_back(r.t);
    h.push_back(r.dtA_l2sq);
  }
  const double dissipated = windowed_trapezoid(t, h, std::min(s, tau), std::max(s, tau));
  const double ym0 = records.front().ym;
  const double gap = std::abs(s - tau);

  LocalEnergy out;
  out.lhs = integrate(Eigen::ArrayXd(es * ball_indicator(grid, x0, R)), metric);
  out.rhs = integrate(Eigen::ArrayXd(et * ball_indicator(grid, x0, 2.0 * R)), metric) + 2.0 * dissipated +
            std::sqrt(C * gap / (R * R) * ym0 * dissipated) + std::sqrt(C * gap * ym0 * dissipated);
  return out;
}

double PhiResult::variation() const {
  if (values.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *lo > 0.0 ? *hi / *lo - 1.0 : std::numeric_limits<double>::infinity();
}

Eigen::ArrayXd backward_heat_kernel(const GridGeometry& grid, const std::vector<double>& x0,
                                    double s, int exponent) {
  check_point(grid, x0);
  if (!(s > 0.0)) throw std::invalid_argument("heat kernel needs t0 - t > 0");
  const int d = grid.real_dim();
  std::vector<Eigen::ArrayXd> disp;
  for (int a = 0; a < d; ++a) disp.push_back(grid.displacement(a, x0[a]));
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(grid.sites());
  int translates = 1;
  for (int a = 0; a < d; ++a) translates *= 3;
  for (int m = 0; m < translates; ++m) {
    Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(grid.sites());
    int code = m;
    for (int a = 0; a < d; ++a) {
      const double shift = (code % 3 - 1) * grid.periods[a];
      code /= 3;
      r2 += (disp[a] + shift).square();
    }
    sum += (-r2 / (4.0 * s)).exp();
  }
  return sum * std::pow(4.0 * std::numbers::pi * s, -exponent);
}

PhiResult phi_monotonicity(const Trajectory<ConnectionState>& traj, const MetricField& metric,
                           const PhiOptions& opt) {
  const GridGeometry& grid = metric.grid;
  const int n = grid.n;
  check_point(grid, opt.x0);
  if (traj.states.size() < 2) throw std::invalid_argument("Phi needs a stored trajectory");
  if (!(opt.R > 0.0) || opt.R > grid.injectivity_radius + 1e-12) {
    throw std::invalid_argument("Phi cutoff radius must lie in (0, i_X]");
  }
  const double r_cap = std::min(0.5 * opt.R, 0.5 * std::sqrt(std::max(opt.t0, 0.0)));
  const int k = opt.kernel_exponent > 0 ? opt.kernel_exponent : n;

  // f = 1 on B_{R/2}, 0 outside B_R, linear in between: |grad f| = 2/R.
  const Eigen::ArrayXd rho = grid.distance_sq(opt.x0).sqrt();
  const Eigen::ArrayXd f = (2.0 - 2.0 * rho / opt.R).min(1.0).max(0.0);
  const Eigen::ArrayXd f2 = f.square();
  const Eigen::ArrayXd ball = ball_indicator(grid, opt.x0, opt.R);

  std::vector<Eigen::ArrayXd> energy;
  energy.reserve(traj.states.size());
  for (const auto& st : traj.states) energy.push_back(energy_density(st, metric));

  auto energy_at = [&](double t) -> Eigen::ArrayXd {
    const auto& ts = traj.times;
    if (t <= ts.front()) return energy.front();
    if (t >= ts.back()) return energy.back();
    const size_t j = std::upper_bound(ts.begin(), ts.end(), t) - ts.begin();
    const double w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
    return (1.0 - w) * energy[j - 1] + w * energy[j];
  };

  PhiResult out;
  out.ym0 = integrate(energy.front(), metric);
  const double tol = 1e-9 * std::max(1.0, opt.t0);
  for (double r : opt.radii) {
    if (!(r > 0.0) || r > r_cap + 1e-12) {
      throw std::invalid_argument("Phi radius " + std::to_string(r) +
                                  " outside (0, min(R/2, sqrt(t0)/2)]");
    }
    const double a = opt.t0 - 4.0 * r * r;
    const double b = opt.t0 - r * r;
    if (a < traj.times.front() - tol || b > traj.times.back() + tol) {
      throw std::invalid_argument("trajectory does not cover the window of r = " +
                                  std::to_string(r));
    }
    // Stored times inside the window plus its interpolated ends.
    std::vector<double> ts{a};
    for (double t : traj.times)
      if (t > a + tol && t < b - tol) ts.push_back(t);
    ts.push_back(b);
    if (ts.size() < 4) {
      throw std::invalid_argument("fewer than two stored states inside the window of r = " +
                                  std::to_string(r));
    }
    std::vector<double> h;
    for (double t : ts) {
      const Eigen::ArrayXd G = backward_heat_kernel(grid, opt.x0, opt.t0 - t, k);
      h.push_back(integrate(Eigen::ArrayXd(energy_at(t) * f2 * G), metric));
    }
    out.radii.push_back(r);
    out.values.push_back(r * r * windowed_trapezoid(ts, h, a, b));
  }

  // Energy over P_R, clipped to the stored times.
  std::vector<double> hp;
  for (const auto& e : energy) hp.push_back(integrate(Eigen::ArrayXd(e * ball), metric));
  out.parabolic_energy = windowed_trapezoid(traj.times, hp, opt.t0 - opt.R * opt.R,
                                            opt.t0 + opt.R * opt.R);

  const double C = opt.C;
  const double tail = C * std::pow(opt.R, 2.0 - 2.0 * n) * out.parabolic_energy;
  for (size_t i = 0; i < out.radii.size(); ++i) {
    for (size_t j = 0; j < out.radii.size(); ++j) {
      const double r1 = out.radii[i], r2 = out.radii[j];
      if (r1 > r2) continue;
      const double bound = C * std::exp(C * (r2 - r1)) * out.values[j] +
                           C * (r2 * r2 - r1 * r1) * out.ym0 + tail;
      if (out.values[i] > bound) out.verdict = false;
    }
  }
  return out;
}

DensityMap density_scan(const Eigen::ArrayXd& energy, const MetricField& metric, double r,
                        double eps1) {
  const GridGeometry& grid = metric.grid;
  if (energy.size() != grid.sites()) throw std::invalid_argument("energy has the wrong size");
  if (!(r > 0.0) || r > grid.injectivity_radius + 1e-12) {
    throw std::invalid_argument("density radius must lie in (0, i_X]");
  }
  const std::vector<double> origin(grid.real_dim(), 0.0);
  Eigen::ArrayXcd kernel = ball_indicator(grid, origin, r).cast<cplx>();
  Eigen::ArrayXcd weighted = (energy * metric.det_g * grid.cell_volume()).cast<cplx>();
  fft_forward(grid, kernel);
  fft_forward(grid, weighted);
  Eigen::ArrayXcd conv = kernel * weighted;
  fft_inverse(grid, conv);

  DensityMap out;
  out.radius = r;
  out.eps1 = eps1;
  // The ball is symmetric, so the periodic convolution is the ball integral.
  out.values = conv.real() * std::pow(r, 4.0 - 2.0 * grid.n);
  out.mask = out.values >= eps1;
  return out;
}

DensityMap density_scan(const ConnectionState& state, const MetricField& metric, double r,
                        double eps1) {
  return density_scan(energy_density(state, metric), metric, r, eps1);
}

double field_variation(const MatrixField& field) {
  const Eigen::ArrayXXcd& raw = field.raw();
  const Eigen::ArrayXXcd centred = raw.rowwise() - raw.colwise().mean();
  return std::sqrt(std::max(0.0, centred.abs2().rowwise().sum().maxCoeff()));
}

std::vector<Cluster> eigenvalue_clustering(const MatrixField& field, double noise) {
  if (field.empty() || field.sites() == 0) return {};
  if (noise < 0.0) noise = field_variation(field);
  std::vector<double> ev;
  ev.reserve(field.sites() * field.dim());
  for (Index s = 0; s < field.sites(); ++s) {
    const Eigen::VectorXd e = hermitian_eigenvalues(field, s);
    ev.insert(ev.end(), e.data(), e.data() + e.size());
  }
  std::sort(ev.begin(), ev.end(), std::greater<>());
  const double threshold = 0.2 * std::abs(ev.front() - ev.back()) + 10.0 * noise;

  std::vector<Cluster> out;
  size_t begin = 0;
  const double sites = static_cast<double>(field.sites());
  for (size_t k = 1; k <= ev.size(); ++k) {
    if (k < ev.size() && ev[k - 1] - ev[k] <= threshold) continue;
    Cluster c;
    double sum = 0.0;
    for (size_t j = begin; j < k; ++j) sum += ev[j];
    c.value = sum / static_cast<double>(k - begin);
    c.multiplicity = static_cast<int>(std::lround(static_cast<double>(k - begin) / sites));
    c.spread = ev[begin] - ev[k - 1];
    out.push_back(c);
    begin = k;
  }
  return out;
}

std::vector<Cluster> eigenvalue_clustering(const ConnectionState& state, const MetricField& metric) {
  const MatrixField X = cplx(0.0, 1.0) * lambda_contract(curvature(metric.grid, state), metric);
  const double covariant = std::sqrt(i_functional(state, metric) / volume(metric));
  return eigenvalue_clustering(X, std::max(field_variation(X), covariant));
}

}  // namespace hymflow

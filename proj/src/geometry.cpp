#include "hymflow/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hymflow {

namespace {

constexpr cplx I(0.0, 1.0);

std::vector<int> mask_letters(FormMask mask) {
  std::vector<int> out;
  for (int l = 0; mask; ++l, mask >>= 1)
    if (mask & 1u) out.push_back(l);
  return out;
}

// Laplace expansion of det Q[rows, cols], vectorized over sites.
Eigen::ArrayXcd minor_det(const MatrixField& Q, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  if (rows.empty()) return Eigen::ArrayXcd::Ones(Q.sites());
  if (rows.size() == 1) return Q.entry(rows[0], cols[0]);
  const std::vector<int> sub_rows(rows.begin() + 1, rows.end());
  Eigen::ArrayXcd det = Eigen::ArrayXcd::Zero(Q.sites());
  for (size_t j = 0; j < cols.size(); ++j) {
    std::vector<int> sub_cols = cols;
    sub_cols.erase(sub_cols.begin() + static_cast<std::ptrdiff_t>(j));
    const Eigen::ArrayXcd term = Q.entry(rows[0], cols[j]) * minor_det(Q, sub_rows, sub_cols);
    if (j % 2) det -= term; else det += term;
  }
  return det;
}

// e_full = full_factor * dx^1 ^ ... ^ dx^{2n}.
cplx full_factor(int n) {
  cplx f = std::pow(cplx(0.0, -2.0), n);
  return (n * (n - 1) / 2) % 2 ? -f : f;
}

FormMask full_mask(int n) { return (1u << (2 * n)) - 1u; }

double factorial(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

Eigen::ArrayXcd as_complex(const Eigen::ArrayXd& a) { return a.cast<cplx>(); }

}  // namespace

const Eigen::ArrayXcd& MetricField::form_gram(FormMask a, FormMask b) const {
  auto it = gram.find({a, b});
  if (it == gram.end()) throw std::out_of_range("no Gram entry for masks of different type");
  return it->second;
}

bool MetricField::has_gram(FormMask a, FormMask b) const { return gram.count({a, b}) != 0; }

MetricField make_metric(const GridGeometry& grid, MatrixField g) {
  const int n = grid.n;
  if (g.dim() != n || g.sites() != grid.sites()) {
    throw std::invalid_argument("metric field does not match the grid");
  }
  g = hermitian_part(g);
  if (min_eigenvalue(g).minCoeff() <= 0.0) {
    throw std::invalid_argument("metric is not positive definite");
  }
  MetricField m;
  m.grid = grid;
  m.g_inv = inverse(g);
  if (n == 1) {
    m.det_g = g.entry(0, 0).real();
  } else {
    m.det_g = (g.entry(0, 0) * g.entry(1, 1) - g.entry(0, 1) * g.entry(1, 0)).real();
  }
  m.g = std::move(g);

  // <dz^j, dz^k> = 2 g^{-1}_{kj},  <dzbar^j, dzbar^k> = 2 g^{-1}_{jk}.
  m.letter_gram = MatrixField(grid.sites(), 2 * n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      m.letter_gram.entry(j, k) = 2.0 * m.g_inv.entry(k, j);
      m.letter_gram.entry(n + j, n + k) = 2.0 * m.g_inv.entry(j, k);
    }
  }
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const auto masks = masks_of_type(n, p, q);
      for (FormMask a : masks) {
        for (FormMask b : masks) {
          m.gram[{a, b}] = minor_det(m.letter_gram, mask_letters(a), mask_letters(b));
        }
      }
    }
  }
  return m;
}

MetricKind parse_metric_kind(const std::string& name) {
  if (name == "kahler_flat") return MetricKind::kahler_flat;
  if (name == "kahler_warped") return MetricKind::kahler_warped;
  if (name == "gauduchon_nonkahler") return MetricKind::gauduchon_nonkahler;
  if (name == "nongauduchon_bump") return MetricKind::nongauduchon_bump;
  throw std::invalid_argument("unknown metric kind '" + name + "'");
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kahler_flat: return "kahler_flat";
    case MetricKind::kahler_warped: return "kahler_warped";
    case MetricKind::gauduchon_nonkahler: return "gauduchon_nonkahler";
    case MetricKind::nongauduchon_bump: return "nongauduchon_bump";
  }
  return "?";
}

MetricField make_test_metric(const GridGeometry& grid, MetricKind kind, double amplitude) {
  const int n = grid.n;
  const Index S = grid.sites();
  const double tau = 2.0 * std::numbers::pi;
  auto phase = [&](int axis) -> Eigen::ArrayXd { return tau * grid.coordinate(axis) / grid.periods[axis]; };
  MatrixField g = MatrixField::identity(S, n);

  switch (kind) {
    case MetricKind::kahler_flat:
      break;
    case MetricKind::kahler_warped: {
      // g_{jk} = delta_{jk} + 2 d_j dbar_k u for a real potential u, so omega
      // differs from the flat form by i del delbar u and stays closed.
      Eigen::ArrayXd u = phase(0).cos() + 0.5 * phase(1).sin();
      if (n == 2) u += 0.5 * (phase(0) + phase(2)).cos() + 0.25 * phase(3).sin();
      u *= amplitude / (4.0 * std::numbers::pi * std::numbers::pi);
      const Eigen::ArrayXcd uc = as_complex(u);
      for (int j = 0; j < n; ++j) {
        const Eigen::ArrayXcd dj = letter_derivative(grid, uc, j);
        for (int k = 0; k < n; ++k) {
          g.entry(j, k) += 2.0 * letter_derivative(grid, dj, n + k);
        }
      }
      break;
    }
    case MetricKind::gauduchon_nonkahler: {
      if (n != 2) throw std::invalid_argument("gauduchon_nonkahler needs complex dimension 2");
      // A single mode in x^1: depends on z^1 only, and delbar f != 0.
      const Eigen::ArrayXcd f = (I * as_complex(phase(0))).exp();
      g.entry(0, 1) = amplitude * f;
      g.entry(1, 0) = amplitude * f.conjugate();
      break;
    }
    case MetricKind::nongauduchon_bump: {
      Eigen::ArrayXd bump = phase(0).cos();
      if (n == 2) bump *= phase(2).cos();
      const Eigen::ArrayXcd factor = as_complex(1.0 + amplitude * bump);
      g.scale(factor);
      break;
    }
  }
  return make_metric(grid, std::move(g));
}

Eigen::ArrayXcd pointwise_inner(const FormField& a, const FormField& b, const MetricField& metric) {
  Eigen::ArrayXcd out = Eigen::ArrayXcd::Zero(metric.grid.sites());
  for (FormMask ma : a.masks()) {
    for (FormMask mb : b.masks()) {
      if (!metric.has_gram(ma, mb)) continue;
      out += metric.form_gram(ma, mb) * trace_product_adjoint(a[ma], b[mb]);
    }
  }
  return out;
}

Eigen::ArrayXd pointwise_norm_sq(const FormField& a, const MetricField& metric) {
  return pointwise_inner(a, a, metric).real();
}

double integrate(const Eigen::ArrayXd& density, const MetricField& metric) {
  return (density * metric.det_g).sum() * metric.grid.cell_volume();
}

cplx integrate(const Eigen::ArrayXcd& density, const MetricField& metric) {
  return (density * as_complex(metric.det_g)).sum() * metric.grid.cell_volume();
}

double l2_norm(const FormField& a, const MetricField& metric) {
  return std::sqrt(std::max(0.0, integrate(pointwise_norm_sq(a, metric), metric)));
}

double volume(const MetricField& metric) {
  return metric.det_g.sum() * metric.grid.cell_volume();
}

cplx top_form_factor(int n) { return full_factor(n); }

cplx integrate_top_form(const GridGeometry& grid, const FormField& form) {
  const FormMask full = full_mask(grid.n);
  if (!form.has(full)) return 0.0;
  return trace(form[full]).sum() * full_factor(grid.n) * grid.cell_volume();
}

FormField fundamental_form(const MetricField& metric) {
  const int n = metric.grid.n;
  FormField w(n, metric.grid.sites(), 1);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const FormMask m = holo_letter(n, j) | antiholo_letter(n, k);
      w.component(m) = MatrixField::scalar(0.5 * I * metric.g.entry(j, k));
    }
  }
  return w;
}

WedgePower wedge_power_volume(const MetricField& metric, int k) {
  const int n = metric.grid.n;
  if (k < 0 || k > n) throw std::invalid_argument("wedge power out of range");
  const Index S = metric.grid.sites();
  FormField power = scalar_form(n, Eigen::ArrayXcd::Ones(S));
  const FormField w = fundamental_form(metric);
  for (int j = 1; j <= k; ++j) {
    power = wedge(power, w);
    power *= 1.0 / j;
  }
  WedgePower out{std::move(power), {}};
  if (k == n) out.density = (out.form[full_mask(n)].entry(0, 0) * full_factor(n)).real();
  return out;
}

MatrixField lambda_contract(const FormField& phi, const MetricField& metric) {
  const int n = metric.grid.n;
  MatrixField out(metric.grid.sites(), phi.dim());
  // Curvature of an integrable connection carries (2,0) + (0,2) parts at
  // round-off level; anything above the integrability floor is an error.
  double size = 0.0, stray = 0.0;
  for (FormMask m : phi.masks()) {
    const double top = phi[m].raw().abs().maxCoeff();
    const bool is_11 = holo_degree(n, m) == 1 && antiholo_degree(n, m) == 1;
    if (is_11) size = std::max(size, top);
    else if (holo_degree(n, m) + antiholo_degree(n, m) == 2) stray = std::max(stray, top);
    else if (top > 0.0) throw std::invalid_argument("lambda_contract expects a 2-form");
  }
  if (stray > 1e-8 * (1.0 + size)) throw std::invalid_argument("lambda_contract expects a (1,1)-form");
  for (FormMask m : phi.masks()) {
    if (holo_degree(n, m) != 1 || antiholo_degree(n, m) != 1) continue;
    int j = 0, k = 0;
    for (int l = 0; l < n; ++l) {
      if (m & holo_letter(n, l)) j = l;
      if (m & antiholo_letter(n, l)) k = l;
    }
    MatrixField term = phi[m];
    term.scale(-2.0 * I * metric.g_inv.entry(k, j));
    out += term;
  }
  return out;
}

FormField hodge_star(const FormField& form, const MetricField& metric) {
  const int n = metric.grid.n;
  const FormMask full = full_mask(n);
  FormField out(n, form.sites(), form.dim(), form.twist());
  const Eigen::ArrayXcd vol = as_complex(metric.det_g) / full_factor(n);
  for (FormMask J : form.masks()) {
    const FormMask Jc = conjugate_mask(n, J);
    const double csign = conjugate_sign(n, J);
    const auto targets = masks_of_type(n, holo_degree(n, Jc), antiholo_degree(n, Jc));
    for (FormMask Im : targets) {
      const FormMask K = full ^ Im;
      const double sign = wedge_sign(Im, K) * csign;
      MatrixField term = form[J];
      term.scale(sign * metric.form_gram(Im, Jc) * vol);
      out.component(K) += term;
    }
  }
  return out;
}

FormField lambda_adjoint(const FormField& form, const MetricField& metric) {
  const int n = metric.grid.n;
  const FormField w = fundamental_form(metric);
  FormField out(n, form.sites(), form.dim(), form.twist());
  for (int k = 0; k <= 2 * n; ++k) {
    FormField piece(n, form.sites(), form.dim(), form.twist());
    bool any = false;
    for (FormMask m : form.masks()) {
      if (form_degree(m) == k) {
        piece.component(m) = form[m];
        any = true;
      }
    }
    if (!any || k < 2) continue;
    FormField r = hodge_star(wedge(w, hodge_star(piece, metric)), metric);
    if (k % 2) r *= -1.0;
    out += r;
  }
  return out;
}

FormField torsion_adjoint(const FormField& F, const MetricField& metric, Dolbeault kind) {
  const int n = metric.grid.n;
  const GridGeometry& grid = metric.grid;
  FormField out(n, F.sites(), F.dim(), F.twist());
  if (n >= 2) {
    // d(omega^{n-2}) / (n-2)! with omega^k/k! from wedge_power_volume.
    const FormField d2 = dolbeault_derivative(grid, wedge_power_volume(metric, n - 2).form, kind);
    out -= hodge_star(wedge(d2, F), metric);
  }
  const FormField d1 = dolbeault_derivative(grid, wedge_power_volume(metric, n - 1).form, kind);
  const FormField lambda_f = zero_form_field(n, lambda_contract(F, metric));
  out += hodge_star(wedge(d1, lambda_f), metric);
  out.set_twist(F.twist());
  return out;
}

FormField torsion_adjoint_apply(const FormField& F, const MetricField& metric) {
  return torsion_adjoint(F, metric, Dolbeault::antiholomorphic) +
         torsion_adjoint(F, metric, Dolbeault::holomorphic);
}

MetricConditions metric_condition_check(const MetricField& metric) {
  const int n = metric.grid.n;
  const GridGeometry& grid = metric.grid;
  auto ddbar = [&](int k) {
    FormField p = wedge_power_volume(metric, k).form;
    p *= factorial(k);
    return dolbeault_derivative(
        grid, dolbeault_derivative(grid, p, Dolbeault::antiholomorphic), Dolbeault::holomorphic);
  };
  MetricConditions c;
  const FormField w = fundamental_form(metric);
  c.omega_norm = l2_norm(w, metric);
  c.kahler_residual = l2_norm(exterior_derivative(grid, w), metric);
  c.gauduchon_residual = l2_norm(ddbar(n - 1), metric);
  if (n >= 2) c.astheno_residual = l2_norm(ddbar(n - 2), metric);
  return c;
}

}  // namespace hymflow

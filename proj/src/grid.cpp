#include "hymflow/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace hymflow {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

Index axis_stride(const GridGeometry& grid, int axis) {
  Index stride = 1;
  for (int a = 0; a < axis; ++a) stride *= grid.N;
  return stride;
}

// Applies a 1-d transform along every line of one axis.
void transform_axis(const GridGeometry& grid, Eigen::ArrayXcd& field, int axis,
                    bool inverse) {
  const Index stride = axis_stride(grid, axis);
  const Index N = grid.N;
  const Index lines = grid.sites() / N;
  parallel_for(lines, [&](Index begin, Index end) {
    Eigen::FFT<double> fft;
    std::vector<cplx> in(N), out(N);
    for (Index line = begin; line < end; ++line) {
      // line enumerates (low, high) with low < stride.
      const Index low = line % stride;
      const Index high = line / stride;
      const Index base = low + high * stride * N;
      for (Index k = 0; k < N; ++k) in[k] = field(base + k * stride);
      if (inverse) {
        fft.inv(out, in);
      } else {
        fft.fwd(out, in);
      }
      for (Index k = 0; k < N; ++k) field(base + k * stride) = out[k];
    }
  });
}

// Per-site value of a per-axis table indexed by the site's coordinate.
Eigen::ArrayXd broadcast_axis(const GridGeometry& grid, int axis, const Eigen::ArrayXd& table) {
  const Index stride = axis_stride(grid, axis);
  Eigen::ArrayXd out(grid.sites());
  for (Index s = 0; s < grid.sites(); ++s) out(s) = table((s / stride) % grid.N);
  return out;
}

}  // namespace

Index GridGeometry::sites() const {
  Index total = 1;
  for (int a = 0; a < real_dim(); ++a) total *= N;
  return total;
}

double GridGeometry::cell_volume() const {
  double v = 1.0;
  for (double h : spacing) v *= h;
  return v;
}

double GridGeometry::coordinate_volume() const {
  double v = 1.0;
  for (double p : periods) v *= p;
  return v;
}

double GridGeometry::min_spacing() const {
  return *std::min_element(spacing.begin(), spacing.end());
}

std::array<int, 4> GridGeometry::site_coords(Index site) const {
  std::array<int, 4> c{0, 0, 0, 0};
  for (int a = 0; a < real_dim(); ++a) {
    c[a] = static_cast<int>(site % N);
    site /= N;
  }
  return c;
}

Index GridGeometry::site_index(const std::array<int, 4>& coords) const {
  Index s = 0;
  for (int a = real_dim() - 1; a >= 0; --a) {
    const int c = ((coords[a] % N) + N) % N;
    s = s * N + c;
  }
  return s;
}

Eigen::ArrayXd GridGeometry::coordinate(int axis) const {
  Eigen::ArrayXd table(N);
  for (int k = 0; k < N; ++k) table(k) = k * spacing[axis];
  return broadcast_axis(*this, axis, table);
}

Eigen::ArrayXd GridGeometry::displacement(int axis, double x0) const {
  const double p = periods[axis];
  Eigen::ArrayXd table(N);
  for (int k = 0; k < N; ++k) {
    double d = k * spacing[axis] - x0;
    d -= p * std::round(d / p);
    table(k) = d;
  }
  return broadcast_axis(*this, axis, table);
}

Eigen::ArrayXd GridGeometry::distance_sq(const std::vector<double>& x0) const {
  Eigen::ArrayXd d2 = Eigen::ArrayXd::Zero(sites());
  for (int a = 0; a < real_dim(); ++a) d2 += displacement(a, x0[a]).square();
  return d2;
}

GridGeometry build_torus_geometry(int n, int N, std::vector<double> periods) {
  if (n != 1 && n != 2) throw std::invalid_argument("complex dimension must be 1 or 2");
  if (N < 8 || !is_power_of_two(N)) {
    throw std::invalid_argument("sites per axis must be a power of two >= 8, got " +
                                std::to_string(N));
  }
  if (periods.empty()) periods.assign(2 * n, 1.0);
  if (static_cast<int>(periods.size()) != 2 * n) {
    throw std::invalid_argument("expected " + std::to_string(2 * n) + " periods");
  }
  for (double p : periods) {
    if (!(p > 0.0)) throw std::invalid_argument("periods must be positive");
  }

  GridGeometry g;
  g.n = n;
  g.N = N;
  g.periods = periods;
  g.injectivity_radius = *std::min_element(periods.begin(), periods.end()) / 2.0;
  for (int a = 0; a < 2 * n; ++a) {
    g.spacing.push_back(periods[a] / N);
    Eigen::ArrayXd k(N), kodd(N);
    for (int m = 0; m < N; ++m) {
      const int freq = m <= N / 2 ? m : m - N;
      k(m) = 2.0 * std::numbers::pi * freq / periods[a];
      kodd(m) = (m == N / 2) ? 0.0 : k(m);
    }
    g.wavenumbers.push_back(k);
    g.odd_wavenumbers.push_back(kodd);
  }
  for (int letter = 0; letter < 2 * n; ++letter) {
    g.letter_multipliers.push_back(letter_multiplier(g, letter));
  }
  return g;
}

bool same_grid(const GridGeometry& a, const GridGeometry& b) {
  return a.n == b.n && a.N == b.N && a.periods == b.periods;
}

void fft_forward(const GridGeometry& grid, Eigen::ArrayXcd& field) {
  for (int a = 0; a < grid.real_dim(); ++a) transform_axis(grid, field, a, false);
}

void fft_inverse(const GridGeometry& grid, Eigen::ArrayXcd& field) {
  for (int a = 0; a < grid.real_dim(); ++a) transform_axis(grid, field, a, true);
}

Eigen::ArrayXcd letter_multiplier(const GridGeometry& grid, int letter) {
  if (static_cast<int>(grid.letter_multipliers.size()) == 2 * grid.n) {
    return grid.letter_multipliers[letter];
  }
  const int j = letter % grid.n;
  const bool antiholo = letter >= grid.n;
  const Eigen::ArrayXd k1 = broadcast_axis(grid, 2 * j, grid.odd_wavenumbers[2 * j]);
  const Eigen::ArrayXd k2 = broadcast_axis(grid, 2 * j + 1, grid.odd_wavenumbers[2 * j + 1]);
  // d/dz = (d/dx - i d/dy)/2 and d/dzbar = (d/dx + i d/dy)/2 on exp(i k.x).
  const cplx I(0.0, 1.0);
  if (antiholo) return 0.5 * (I * k1.cast<cplx>() - k2.cast<cplx>());
  return 0.5 * (I * k1.cast<cplx>() + k2.cast<cplx>());
}

std::vector<Eigen::ArrayXcd> letter_derivatives(const GridGeometry& grid,
                                                const Eigen::ArrayXcd& field) {
  Eigen::ArrayXcd spectrum = field;
  fft_forward(grid, spectrum);
  std::vector<Eigen::ArrayXcd> out;
  out.reserve(2 * grid.n);
  for (int letter = 0; letter < 2 * grid.n; ++letter) {
    Eigen::ArrayXcd d = spectrum * grid.letter_multipliers[letter];
    fft_inverse(grid, d);
    out.push_back(std::move(d));
  }
  return out;
}

Eigen::ArrayXcd letter_derivative(const GridGeometry& grid, const Eigen::ArrayXcd& field,
                                  int letter) {
  Eigen::ArrayXcd d = field;
  fft_forward(grid, d);
  d *= grid.letter_multipliers[letter];
  fft_inverse(grid, d);
  return d;
}

Eigen::ArrayXcd axis_derivative(const GridGeometry& grid, const Eigen::ArrayXcd& field,
                                int axis) {
  Eigen::ArrayXcd d = field;
  fft_forward(grid, d);
  d *= cplx(0.0, 1.0) * broadcast_axis(grid, axis, grid.odd_wavenumbers[axis]).cast<cplx>();
  fft_inverse(grid, d);
  return d;
}

int worker_threads() {
  static const int width = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("HYMFLOW_THREADS")) {
      const int cap = std::atoi(env);
      if (cap > 0) return std::min(cap, hw);
    }
    return hw;
  }();
  return width;
}

}  // namespace hymflow

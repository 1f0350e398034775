#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace hymflow {

using Index = Eigen::Index;
using cplx = std::complex<double>;

/// Periodic lattice over a flat complex torus of complex dimension n (1 or 2).
///
/// Real coordinates x^1..x^{2n} with z^j = x^{2j-1} + i x^{2j}. Sites are laid
/// out with the first real axis varying fastest.
struct GridGeometry {
  int n = 1;
  int N = 16;
  std::vector<double> periods;
  std::vector<double> spacing;
  double injectivity_radius = 0.5;
  /// Angular wavenumbers per axis, length N in FFT order. The Nyquist entry is
  /// kept so second derivatives see it; first derivatives use `odd_wavenumbers`.
  std::vector<Eigen::ArrayXd> wavenumbers;
  std::vector<Eigen::ArrayXd> odd_wavenumbers;
  /// Cached per-site Fourier multipliers of the 2n letter derivatives.
  std::vector<Eigen::ArrayXcd> letter_multipliers;

  int real_dim() const { return 2 * n; }
  Index sites() const;
  double cell_volume() const;
  /// Coordinate volume of the torus (product of periods).
  double coordinate_volume() const;
  double min_spacing() const;

  std::array<int, 4> site_coords(Index site) const;
  Index site_index(const std::array<int, 4>& coords) const;
  /// Real coordinate x^{axis+1} at every site.
  Eigen::ArrayXd coordinate(int axis) const;
  /// Minimum-image coordinate displacement x - x0 along one axis, at every site.
  Eigen::ArrayXd displacement(int axis, double x0) const;
  /// Squared periodic (minimum image) Euclidean distance from x0.
  Eigen::ArrayXd distance_sq(const std::vector<double>& x0) const;
};

/// Throws std::invalid_argument for N < 8, N not a power of two, n outside
/// {1, 2}, or non-positive periods. An empty `periods` means unit periods.
GridGeometry build_torus_geometry(int n, int N, std::vector<double> periods = {});

bool same_grid(const GridGeometry& a, const GridGeometry& b);

// Spectral transforms on the periodic lattice.
void fft_forward(const GridGeometry& grid, Eigen::ArrayXcd& field);
void fft_inverse(const GridGeometry& grid, Eigen::ArrayXcd& field);

/// Fourier multiplier of the letter derivative: letters 0..n-1 are d/dz^j,
/// letters n..2n-1 are d/dzbar^j.
Eigen::ArrayXcd letter_multiplier(const GridGeometry& grid, int letter);

/// All 2n letter derivatives of a scalar field from one forward transform.
std::vector<Eigen::ArrayXcd> letter_derivatives(const GridGeometry& grid,
                                                const Eigen::ArrayXcd& field);
Eigen::ArrayXcd letter_derivative(const GridGeometry& grid, const Eigen::ArrayXcd& field,
                                  int letter);
/// Real partial derivative along one axis.
Eigen::ArrayXcd axis_derivative(const GridGeometry& grid, const Eigen::ArrayXcd& field,
                                int axis);

/// Caps the number of worker threads used by data-parallel loops. Reads
/// HYMFLOW_THREADS; defaults to the hardware concurrency.
int worker_threads();

/// Runs body(begin, end) over disjoint chunks of [0, count). Chunk results
/// must not depend on the partition, so output is identical for any width.
template <typename Body>
void parallel_for(Index count, Body&& body);

template <typename Body>
void parallel_for(Index count, Body&& body) {
  const int width = worker_threads();
  if (width <= 1 || count < 64) {
    body(Index{0}, count);
    return;
  }
  const Index chunk = (count + width - 1) / width;
  std::vector<std::jthread> workers;
  for (Index begin = 0; begin < count; begin += chunk) {
    const Index end = std::min(count, begin + chunk);
    workers.emplace_back([&body, begin, end] { body(begin, end); });
  }
}

}  // namespace hymflow

#pragma once

#include <cmath>
#include <numbers>

#include "hymflow/bundle.hpp"
#include "hymflow/geometry.hpp"

namespace test {

using namespace hymflow;

constexpr double pi = std::numbers::pi;

// Sum of a few low plane waves per component; deterministic.
inline FormField smooth_form(const GridGeometry& grid, int rank, int degree, double salt = 0.0) {
  FormField f(grid.n, grid.sites(), rank);
  for (FormMask m : masks_of_degree(grid.n, degree)) {
    for (int c = 0; c < rank * rank; ++c) {
      Eigen::ArrayXd ph = Eigen::ArrayXd::Zero(grid.sites());
      for (int ax = 0; ax < grid.real_dim(); ++ax) {
        ph += 2.0 * pi * ((c + ax + static_cast<int>(m)) % 3 - 1) * grid.coordinate(ax);
      }
      const cplx amp(0.3 * c + 1.0 + salt, 0.7 - 0.1 * m);
      f.component(m).raw().col(c) =
          amp * (cplx(0.0, 1.0) * ph.cast<cplx>()).exp() + cplx(0.2, 0.1 * c + salt);
    }
  }
  return f;
}

inline double max_abs(const Eigen::ArrayXcd& a) { return a.abs().maxCoeff(); }

}  // namespace test

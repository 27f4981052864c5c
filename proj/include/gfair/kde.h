#pragma once

#include <cmath>
#include <vector>

namespace gfair {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double gaussian_kernel(double u) {
  return kInvSqrt2Pi * std::exp(-0.5 * u * u);
}

// Calls f(j, K(u_j), u_j) for grid points z_j = (j+1)/m, j = 0..m-1, with
// u_j = (z_j - y)/h. Kernel values come from a multiplicative recurrence
// walking outward from the grid point nearest y, re-anchored with an exact
// exp every few hundred steps. Points where K has underflowed are skipped.
template <typename F>
void for_each_kernel_value(double y, double h, int m, F&& f) {
  constexpr int kReanchor = 256;
  constexpr double kTiny = 1e-300;
  const double delta = 1.0 / m;
  const double step = delta / h;
  const double q = std::exp(-step * step);
  int peak = static_cast<int>(std::lround(y * m)) - 1;
  if (peak < 0) peak = 0;
  if (peak > m - 1) peak = m - 1;

  // Upward from the peak: g_{j+1} = g_j r_j, r_{j+1} = r_j q.
  double g = 0.0, r = 0.0;
  for (int j = peak, k = 0; j < m; ++j, ++k) {
    const double u = ((j + 1) * delta - y) / h;
    if (k % kReanchor == 0) {
      g = gaussian_kernel(u);
      r = std::exp(-u * step - 0.5 * step * step);
    }
    if (g < kTiny) break;
    f(j, g, u);
    g *= r;
    r *= q;
  }
  // Downward: g_{j-1} = g_j r'_j, r'_{j-1} = r'_j q.
  for (int j = peak - 1, k = 0; j >= 0; --j, ++k) {
    const double u = ((j + 1) * delta - y) / h;
    if (k % kReanchor == 0) {
      g = gaussian_kernel(u);
      r = std::exp(u * step - 0.5 * step * step);
    }
    if (g < kTiny) break;
    f(j, g, u);
    g *= r;
    r *= q;
  }
}

// Group-conditional KDE densities of predictions on the grid j/m, j = 1..m.
struct GroupDensities {
  std::vector<double> p0;
  std::vector<double> p1;
  int n0 = 0;
  int n1 = 0;
};

// Uses every index of `predictions`; sensitive[i] in {0,1}. Throws
// std::invalid_argument when a group is empty.
GroupDensities group_densities(const std::vector<double>& predictions,
                               const std::vector<int>& sensitive, double h,
                               int m);

}  // namespace gfair

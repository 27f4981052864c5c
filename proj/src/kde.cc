#include "gfair/kde.h"

#include <algorithm>
#include <stdexcept>

namespace gfair {

GroupDensities group_densities(const std::vector<double>& predictions,
                               const std::vector<int>& sensitive, double h,
                               int m) {
  if (predictions.size() != sensitive.size()) {
    throw std::invalid_argument("kde: predictions/sensitive size mismatch");
  }
  if (!(h > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
  if (m < 2) throw std::invalid_argument("kde: grid size must be >= 2");
  GroupDensities out;
  out.p0.assign(m, 0.0);
  out.p1.assign(m, 0.0);
  for (int s : sensitive) (s == 0 ? out.n0 : out.n1)++;
  if (out.n0 == 0 || out.n1 == 0) {
    throw std::invalid_argument("kde: empty sensitive group");
  }
  // Accumulate each group in sorted order so that equal multisets give
  // bit-identical densities.
  std::vector<double> values[2];
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    values[sensitive[i] == 0 ? 0 : 1].push_back(predictions[i]);
  }
  for (int g = 0; g < 2; ++g) {
    std::sort(values[g].begin(), values[g].end());
    std::vector<double>& dst = g == 0 ? out.p0 : out.p1;
    for (double y : values[g]) {
      for_each_kernel_value(y, h, m, [&](int j, double k, double) { dst[j] += k; });
    }
  }
  const double s0 = 1.0 / (h * out.n0);
  const double s1 = 1.0 / (h * out.n1);
  for (int j = 0; j < m; ++j) {
    out.p0[j] *= s0;
    out.p1[j] *= s1;
  }
  return out;
}

}  // namespace gfair

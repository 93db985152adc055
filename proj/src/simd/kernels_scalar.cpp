// Copyright 2026 The ncf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstddef>

#include "ncf/simd.hpp"

namespace ncf::simd::detail {
namespace {

inline void neumaier_add(double& sum, double& comp, double v) {
  const double t = sum + v;
  if (std::fabs(sum) >= std::fabs(v)) {
    comp += (sum - t) + v;
  } else {
    comp += (v - t) + sum;
  }
  sum = t;
}

}  // namespace

void transfer_branch_sum_scalar(const double* grid, std::size_t resolution, double n,
                                std::int64_t i_first, std::int64_t i_last, const double* xs,
                                double* out, std::size_t count) {
  const double m = static_cast<double>(resolution);
  const double last_cell = m - 1.0;
  for (std::size_t p = 0; p < count; ++p) {
    const double x = xs[p];
    const double xn = x + n;
    double sum = 0.0;
    double comp = 0.0;
    for (std::int64_t i = i_first; i <= i_last; ++i) {
      const double xi = x + static_cast<double>(i);
      const double xi1 = xi + 1.0;
      const double y = n / xi;
      const double t = y * m;
      const double kd = std::fmin(std::floor(t), last_cell);
      const double frac = t - kd;
      const auto k = static_cast<std::size_t>(kd);
      const double f0 = grid[k];
      const double f1 = grid[k + 1];
      const double fy = f0 + frac * (f1 - f0);
      const double weight = xn / (xi * xi1);
      neumaier_add(sum, comp, weight * fy);
    }
    out[p] = sum + comp;
  }
}

double weighted_l1_scalar(const double* w, const double* a, const double* b, std::size_t count) {
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) sum += w[k] * std::fabs(a[k] - b[k]);
  return sum;
}

double l1_distance_scalar(const double* a, const double* b, std::size_t count) {
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) sum += std::fabs(a[k] - b[k]);
  return sum;
}

void gauss_map_iterate_scalar(double* xs, std::size_t count, double n, int steps) {
  for (std::size_t p = 0; p < count; ++p) {
    double x = xs[p];
    for (int s = 0; s < steps; ++s) {
      if (x == 0.0) break;
      const double q = n / x;
      x = q - std::floor(q);
    }
    xs[p] = x;
  }
}

}  // namespace ncf::simd::detail

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

#include <immintrin.h>

#include <cstddef>

#include "ncf/simd.hpp"

namespace ncf::simd::detail {
namespace {

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

inline double horizontal_sum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

void transfer_branch_sum_avx2(const double* grid, std::size_t resolution, double n,
                              std::int64_t i_first, std::int64_t i_last, const double* xs,
                              double* out, std::size_t count) {
  const __m256d vn = _mm256_set1_pd(n);
  const __m256d vm = _mm256_set1_pd(static_cast<double>(resolution));
  const __m256d last_cell = _mm256_set1_pd(static_cast<double>(resolution) - 1.0);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t p = 0;
  for (; p + 4 <= count; p += 4) {
    const __m256d x = _mm256_loadu_pd(xs + p);
    const __m256d xn = _mm256_add_pd(x, vn);
    __m256d sum = _mm256_setzero_pd();
    __m256d comp = _mm256_setzero_pd();
    for (std::int64_t i = i_first; i <= i_last; ++i) {
      const __m256d xi = _mm256_add_pd(x, _mm256_set1_pd(static_cast<double>(i)));
      const __m256d xi1 = _mm256_add_pd(xi, one);
      const __m256d y = _mm256_div_pd(vn, xi);
      const __m256d t = _mm256_mul_pd(y, vm);
      const __m256d kd = _mm256_min_pd(_mm256_floor_pd(t), last_cell);
      const __m256d frac = _mm256_sub_pd(t, kd);
      const __m128i k = _mm256_cvttpd_epi32(kd);
      const __m256d f0 = _mm256_i32gather_pd(grid, k, 8);
      const __m256d f1 = _mm256_i32gather_pd(grid + 1, k, 8);
      const __m256d fy = _mm256_add_pd(f0, _mm256_mul_pd(frac, _mm256_sub_pd(f1, f0)));
      const __m256d weight = _mm256_div_pd(xn, _mm256_mul_pd(xi, xi1));
      const __m256d v = _mm256_mul_pd(weight, fy);
      const __m256d s = _mm256_add_pd(sum, v);
      const __m256d big_sum = _mm256_cmp_pd(abs_pd(sum), abs_pd(v), _CMP_GE_OQ);
      const __m256d c_sum = _mm256_add_pd(_mm256_sub_pd(sum, s), v);
      const __m256d c_v = _mm256_add_pd(_mm256_sub_pd(v, s), sum);
      comp = _mm256_add_pd(comp, _mm256_blendv_pd(c_v, c_sum, big_sum));
      sum = s;
    }
    _mm256_storeu_pd(out + p, _mm256_add_pd(sum, comp));
  }
  if (p < count) {
    transfer_branch_sum_scalar(grid, resolution, n, i_first, i_last, xs + p, out + p, count - p);
  }
}

double weighted_l1_avx2(const double* w, const double* a, const double* b, std::size_t count) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) {
    const __m256d d = abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(w + k), d));
  }
  return horizontal_sum(acc) + weighted_l1_scalar(w + k, a + k, b + k, count - k);
}

double l1_distance_avx2(const double* a, const double* b, std::size_t count) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) {
    acc = _mm256_add_pd(acc, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k))));
  }
  return horizontal_sum(acc) + l1_distance_scalar(a + k, b + k, count - k);
}

void gauss_map_iterate_avx2(double* xs, std::size_t count, double n, int steps) {
  const __m256d vn = _mm256_set1_pd(n);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t p = 0;
  for (; p + 4 <= count; p += 4) {
    __m256d x = _mm256_loadu_pd(xs + p);
    for (int s = 0; s < steps; ++s) {
      const __m256d is_zero = _mm256_cmp_pd(x, zero, _CMP_EQ_OQ);
      const __m256d q = _mm256_div_pd(vn, x);
      const __m256d next = _mm256_sub_pd(q, _mm256_floor_pd(q));
      x = _mm256_blendv_pd(next, zero, is_zero);
    }
    _mm256_storeu_pd(xs + p, x);
  }
  if (p < count) gauss_map_iterate_scalar(xs + p, count - p, n, steps);
}

}  // namespace ncf::simd::detail

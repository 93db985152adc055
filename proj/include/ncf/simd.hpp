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

#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference and, on
// x86-64, an AVX2 variant chosen at runtime. Elementwise kernels round
// identically in both variants; reductions agree to a few ulps.

#include <cstdint>
#include <span>
#include <string_view>

namespace ncf::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);

// Best available ISA, unless NCF_SIMD=scalar|avx2 in the environment says
// otherwise. Resolved once.
Isa active_isa();
// Overrides active_isa() for the rest of the process (tests, benchmarks).
void force_isa(Isa isa);

// For every point x = xs[p] accumulates the truncated branch sum
//   sum_{i=i_first}^{i_last} (x+N)/((x+i)(x+i+1)) * F(N/(x+i))
// where F is the piecewise-linear interpolant of `grid` on nodes j/M,
// M = grid.size() - 1. Uses Neumaier compensation per point; out[p] is
// overwritten.
void transfer_branch_sum(Isa isa, std::span<const double> grid, std::int64_t n_param,
                         std::int64_t i_first, std::int64_t i_last,
                         std::span<const double> xs, std::span<double> out);

// sum_k weight[k] * |a[k] - b[k]|
double weighted_l1(Isa isa, std::span<const double> weight, std::span<const double> a,
                   std::span<const double> b);

// sum_k |a[k] - b[k]|
double l1_distance(Isa isa, std::span<const double> a, std::span<const double> b);

// Applies T_N `steps` times to every element in place.
void gauss_map_iterate(Isa isa, std::span<double> xs, std::int64_t n_param, int steps);

namespace detail {

void transfer_branch_sum_scalar(const double* grid, std::size_t resolution, double n,
                                std::int64_t i_first, std::int64_t i_last, const double* xs,
                                double* out, std::size_t count);
double weighted_l1_scalar(const double* w, const double* a, const double* b, std::size_t count);
double l1_distance_scalar(const double* a, const double* b, std::size_t count);
void gauss_map_iterate_scalar(double* xs, std::size_t count, double n, int steps);

void transfer_branch_sum_avx2(const double* grid, std::size_t resolution, double n,
                              std::int64_t i_first, std::int64_t i_last, const double* xs,
                              double* out, std::size_t count);
double weighted_l1_avx2(const double* w, const double* a, const double* b, std::size_t count);
double l1_distance_avx2(const double* a, const double* b, std::size_t count);
void gauss_map_iterate_avx2(double* xs, std::size_t count, double n, int steps);

}  // namespace detail
}  // namespace ncf::simd

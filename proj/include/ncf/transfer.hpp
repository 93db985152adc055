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

// The transfer operator U of T_N under G_N, acting on functions sampled at
// the nodes j/M of [0,1]:
//   (Uf)(x) = sum_{i >= N} (x+N)/((x+i)(x+i+1)) f(N/(x+i)).

#include <cstdint>
#include <span>
#include <vector>

#include "ncf/core.hpp"
#include "ncf/measure.hpp"
#include "ncf/quadrature.hpp"

namespace ncf {

// Samples at x_j = j/M, j = 0..M; linear interpolation in between.
class GridFunction {
 public:
  explicit GridFunction(std::vector<double> values);

  static GridFunction sample(const RealFunction& f, std::size_t resolution);
  static GridFunction constant(double c, std::size_t resolution);

  std::size_t resolution() const { return values_.size() - 1; }
  double node(std::size_t j) const;
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  double operator()(double x) const;

  friend bool operator==(const GridFunction&, const GridFunction&) = default;
  // Pointwise arithmetic; operands must share M.
  friend GridFunction operator+(const GridFunction& a, const GridFunction& b);
  friend GridFunction operator-(const GridFunction& a, const GridFunction& b);
  friend GridFunction operator*(double c, const GridFunction& f);

 private:
  std::vector<double> values_;
};

// Branches N..i_max are summed explicitly. i_max >= N*M puts every later
// image inside the first cell, where the interpolant is linear and the tail
// has a closed form.
std::int64_t transfer_truncation(NcfParams params, std::size_t resolution);

GridFunction apply_transfer(const GridFunction& f, NcfParams params);
// (Uf)(x) at one point, with the same interpolation and tail.
double transfer_at(const GridFunction& f, NcfParams params, double x);

struct LipschitzNormEstimate {
  double sup_part = 0.0;
  double slope_part = 0.0;
  double total = 0.0;
};
LipschitzNormEstimate lipschitz_norm(const GridFunction& f);

// (1/n) sum_{k=1..n} U^k f
GridFunction cesaro_operator(const GridFunction& f, int n, NcfParams params);

// Integrals of the interpolant against G_N, exact cell by cell.
double integrate_gn(const GridFunction& f, const GaussMeasure& gm);
double integrate_gn(const GridFunction& f, const GaussMeasure& gm, double x_end);
// Running integrals over [0, x_j] at every node.
std::vector<double> cumulative_gn(const GridFunction& f, const GaussMeasure& gm);

// Least squares fit of log e_n = log k + n log q.
struct GeometricFit {
  double q = 0.0;
  double k = 0.0;
  std::vector<int> n_values;
  std::vector<double> residuals;  // log e_n minus the fitted line
  double max_abs_residual = 0.0;
};
// Uses the leading run of n >= n_first whose error exceeds `floor`.
// Throws FitError with fewer than 3 such points.
GeometricFit fit_geometric(std::span<const double> errors, double floor, int n_first = 1);

struct GapEstimate {
  double q_hat = 0.0;
  double k_hat = 0.0;
  double c_f = 0.0;           // integral of f against G_N
  double drift = 0.0;         // max_n |integral of U^n f - c_f|
  double floor = 0.0;         // errors at or below this are not fitted
  std::vector<double> sup_errors;        // n = 0..n_max
  std::vector<double> lipschitz_errors;  // same curve in the grid Lipschitz norm
  GeometricFit fit;
};

// e_n = max_j |U^n f(x_j) - c_f|, fitted over n >= 1 while
// e_n > max(100 eps, 10 drift).
GapEstimate estimate_gap(const GridFunction& f, NcfParams params, int n_max);

}  // namespace ncf

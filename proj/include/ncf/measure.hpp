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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ncf/core.hpp"
#include "ncf/quadrature.hpp"
#include "ncf/random.hpp"

namespace ncf {

// The T_N-invariant probability G_N with density 1/((x+N) log((N+1)/N)).
class GaussMeasure {
 public:
  explicit GaussMeasure(NcfParams params);

  NcfParams params() const { return params_; }
  // log((N+1)/N), the normalizer.
  double log_norm() const { return log_norm_; }
  double density(double x) const;

 private:
  NcfParams params_;
  double log_norm_;
};

double gn_cdf(double x, const GaussMeasure& gm);
double gn_measure(double a, double b, const GaussMeasure& gm);
// Inverse of gn_cdf: N((N+1)/N)^u - N.
double gn_inverse_cdf(double u, const GaussMeasure& gm);
double gn_sample(UniformStream& stream, const GaussMeasure& gm);

// G_N({x : a_1(x) = i}) = log((i+1)^2 / (i(i+2))) / log((N+1)/N), i >= N.
double digit_law(std::int64_t i, const GaussMeasure& gm);
// Exact mass of {a_1 >= i}: log((i+1)/i) / log((N+1)/N).
double digit_tail_law(std::int64_t i, const GaussMeasure& gm);

// A probability density on [0,1]. Construction integrates the evaluator and
// rejects it unless the mass is 1 within `mass_tolerance`.
class DensityFunction {
 public:
  DensityFunction(RealFunction evaluator, std::optional<double> lipschitz_bound = {},
                  std::vector<double> breakpoints = {}, double mass_tolerance = 1e-9);

  double operator()(double x) const { return evaluator_(x); }
  const RealFunction& evaluator() const { return evaluator_; }
  std::optional<double> lipschitz_bound() const { return lipschitz_bound_; }
  std::span<const double> breakpoints() const { return breakpoints_; }
  // Mass found by the construction check.
  double mass() const { return mass_; }

 private:
  RealFunction evaluator_;
  std::optional<double> lipschitz_bound_;
  std::vector<double> breakpoints_;
  double mass_;
};

}  // namespace ncf

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

#include "ncf/measure.hpp"

#include <cmath>
#include <string>

#include "ncf/errors.hpp"

namespace ncf {
namespace {

void require_unit(double x, const char* what) {
  if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
    throw DomainError(std::string(what) + ": argument must lie in [0,1]");
  }
}

}  // namespace

GaussMeasure::GaussMeasure(NcfParams params)
    : params_(params), log_norm_(std::log1p(1.0 / params.nd())) {}

double GaussMeasure::density(double x) const {
  require_unit(x, "density");
  return 1.0 / ((x + params_.nd()) * log_norm_);
}

double gn_cdf(double x, const GaussMeasure& gm) {
  require_unit(x, "gn_cdf");
  if (x == 1.0) return 1.0;
  return std::log1p(x / gm.params().nd()) / gm.log_norm();
}

double gn_measure(double a, double b, const GaussMeasure& gm) {
  require_unit(a, "gn_measure");
  require_unit(b, "gn_measure");
  if (a > b) throw DomainError("gn_measure: requires a <= b");
  if (a == b) return 0.0;
  // log((b+N)/(a+N)) directly; differencing two CDF values loses digits.
  return std::log1p((b - a) / (a + gm.params().nd())) / gm.log_norm();
}

double gn_inverse_cdf(double u, const GaussMeasure& gm) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("gn_inverse_cdf: u must lie in [0,1]");
  const double x = gm.params().nd() * std::expm1(u * gm.log_norm());
  return std::min(x, 1.0);
}

double gn_sample(UniformStream& stream, const GaussMeasure& gm) {
  return gn_inverse_cdf(stream.next(), gm);
}

double digit_law(std::int64_t i, const GaussMeasure& gm) {
  if (i < gm.params().n()) throw DomainError("digit_law: digit must be >= N");
  const double d = static_cast<double>(i);
  return std::log1p(1.0 / (d * (d + 2.0))) / gm.log_norm();
}

double digit_tail_law(std::int64_t i, const GaussMeasure& gm) {
  if (i < gm.params().n()) throw DomainError("digit_tail_law: digit must be >= N");
  return std::log1p(1.0 / static_cast<double>(i)) / gm.log_norm();
}

DensityFunction::DensityFunction(RealFunction evaluator, std::optional<double> lipschitz_bound,
                                 std::vector<double> breakpoints, double mass_tolerance)
    : evaluator_(std::move(evaluator)),
      lipschitz_bound_(lipschitz_bound),
      breakpoints_(std::move(breakpoints)) {
  if (!evaluator_) throw DomainError("DensityFunction: empty evaluator");
  mass_ = integrate(evaluator_, 0.0, 1.0, breakpoints_);
  if (!(std::abs(mass_ - 1.0) <= mass_tolerance)) {
    throw DomainError("DensityFunction: mass " + std::to_string(mass_) + " is not 1");
  }
}

}  // namespace ncf

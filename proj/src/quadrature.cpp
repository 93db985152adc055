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

#include "ncf/quadrature.hpp"

#include <algorithm>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ncf/errors.hpp"

namespace ncf {

double integrate(const RealFunction& f, double a, double b,
                 std::span<const double> breakpoints, double tolerance) {
  if (!(a <= b)) throw DomainError("integrate: requires a <= b");
  if (a == b) return 0.0;
  std::vector<double> cuts{a};
  for (double c : breakpoints) {
    if (c > a && c < b) cuts.push_back(c);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    // Boost compares its error floor 2 eps |K| on [-1,1] against tol times
    // the estimate on [c,d]; on short pieces that test can never pass, so
    // each piece is mapped to [-1,1] first.
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const double half = 0.5 * (cuts[k + 1] - cuts[k]);
    const auto g = [&](double t) { return f(mid + half * t); };
    total += half * Rule::integrate(g, -1.0, 1.0, 15, tolerance);
  }
  return total;
}

}  // namespace ncf

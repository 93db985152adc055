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

#include <functional>
#include <span>

namespace ncf {

using RealFunction = std::function<double(double)>;

// Adaptive Gauss-Kronrod integration over [a,b]. The interval is split at
// every breakpoint inside (a,b) first, so integrands with known jumps or
// kinks converge at the smooth rate. `tolerance` is relative to the L1 norm
// of each piece.
double integrate(const RealFunction& f, double a, double b,
                 std::span<const double> breakpoints = {},
                 double tolerance = 1e-13);

}  // namespace ncf

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

#include <charconv>
#include <cmath>
#include <string>

#include "ncf/errors.hpp"
#include "ncf/rscc.hpp"

namespace ncf {
namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

MealySystem::MealySystem(double a, double b) : alpha(a), beta(b) {
  if (!(a >= 0.0 && a <= 1.0) || !(b >= 0.0 && b <= 1.0)) {
    throw DomainError("MealySystem: alpha and beta must lie in [0,1]");
  }
}

double MealySystem::p(int state, int input) const {
  if ((state != 1 && state != 2) || (input != 1 && input != 2)) {
    throw DomainError("MealySystem: states and inputs are 1 or 2");
  }
  const double stay = state == 1 ? alpha : beta;
  return input == 1 ? stay : 1.0 - stay;
}

RsccSystem make_mealy_rscc(const MealySystem& m) {
  RsccSystem::Spec spec;
  spec.name = "mealy(alpha=" + shortest(m.alpha) + ",beta=" + shortest(m.beta) + ")";
  spec.states = StateSpace{1.0, 2.0, {1.0, 2.0}};
  spec.events = EventSet{1, 2};
  spec.transition = [](double, Event j) { return static_cast<double>(j); };
  spec.probability = [m](double w, Event j) {
    return m.p(static_cast<int>(w), static_cast<int>(j));
  };
  return RsccSystem(std::move(spec));
}

std::string mealy_dot_export(const MealySystem& m) {
  std::string out = "digraph mealy {\n  rankdir=LR;\n  node [shape=circle];\n";
  for (int i = 1; i <= 2; ++i) {
    for (int k = 1; k <= 2; ++k) {
      out += "  " + std::to_string(i) + " -> " + std::to_string(k) + " [label=\"" +
             std::to_string(k) + "/" + shortest(m.p(i, k)) + "\"];\n";
    }
  }
  out += "}\n";
  return out;
}

}  // namespace ncf

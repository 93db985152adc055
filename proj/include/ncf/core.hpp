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
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace ncf {

using BigInt = boost::multiprecision::cpp_int;
// Always normalized: lowest terms, positive denominator.
using Rational = boost::multiprecision::cpp_rational;

// The integer N >= 1 selecting the map T_N(x) = N/x - floor(N/x).
class NcfParams {
 public:
  explicit NcfParams(std::int64_t n);

  std::int64_t n() const { return n_; }
  double nd() const { return static_cast<double>(n_); }

  friend bool operator==(const NcfParams&, const NcfParams&) = default;

 private:
  std::int64_t n_;
};

// Partial quotients a_1, a_2, ... of an N-continued fraction. `terminated`
// is set when an iterate hit 0 exactly, i.e. the expansion is complete.
struct DigitSequence {
  std::vector<std::int64_t> digits;
  bool terminated = false;

  friend bool operator==(const DigitSequence&, const DigitSequence&) = default;
};

double gauss_map(double x, NcfParams params);
Rational gauss_map_rational(const Rational& x, NcfParams params);

// Float path. Stops after max_len digits or when an iterate is exactly 0.
// Digit-boundary ties resolve by the floor of the rounded quotient N/x.
DigitSequence digits(double x, NcfParams params, std::size_t max_len);

// Exact path. Without max_len the expansion runs to termination, which is
// guaranteed for rationals because denominators strictly decrease.
DigitSequence digits(const Rational& x, NcfParams params,
                     std::optional<std::size_t> max_len = std::nullopt);

// [a_1, ..., a_k]_N = N/(a_1 + N/(a_2 + ... + N/a_k)), evaluated backwards.
Rational evaluate(const DigitSequence& seq, NcfParams params);

// p_k/q_k for every prefix, via p_k = a_k p_{k-1} + N p_{k-2} and the same
// for q with (p_{-1}, p_0) = (1, 0), (q_{-1}, q_0) = (0, 1).
std::vector<Rational> convergents(const DigitSequence& seq, NcfParams params);

// The attracting fixed point x* = (-N + sqrt(N^2 + 4N)) / 2 of
// x -> N/(x + N); also a fixed point of T_N.
double fixed_point(NcfParams params);

}  // namespace ncf

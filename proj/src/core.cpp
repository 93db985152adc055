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

#include "ncf/core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ncf/errors.hpp"

namespace ncf {
namespace {

constexpr double kMaxDigit = 9.2e18;

void require_unit_interval(double x, const char* what) {
  if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
    throw DomainError(std::string(what) + ": x must be a finite value in [0,1]");
  }
}

void require_unit_interval(const Rational& x, const char* what) {
  if (x < 0 || x > 1) {
    throw DomainError(std::string(what) + ": x must lie in [0,1]");
  }
}

// floor of a non-negative rational.
BigInt floor_nonneg(const Rational& q) {
  return boost::multiprecision::numerator(q) / boost::multiprecision::denominator(q);
}

std::int64_t to_digit(const BigInt& a) {
  if (a > BigInt(std::numeric_limits<std::int64_t>::max())) {
    throw DomainError("digit exceeds the 64-bit range");
  }
  return a.convert_to<std::int64_t>();
}

void require_digits(const DigitSequence& seq) {
  if (seq.digits.empty()) throw DomainError("empty digit sequence");
  for (auto a : seq.digits) {
    if (a < 1) throw DomainError("digits must be positive integers");
  }
}

}  // namespace

NcfParams::NcfParams(std::int64_t n) : n_(n) {
  if (n < 1) throw DomainError("N must be >= 1");
}

double gauss_map(double x, NcfParams params) {
  require_unit_interval(x, "gauss_map");
  if (x == 0.0) return 0.0;
  const double q = params.nd() / x;
  return q - std::floor(q);
}

Rational gauss_map_rational(const Rational& x, NcfParams params) {
  require_unit_interval(x, "gauss_map_rational");
  if (x == 0) return Rational(0);
  const Rational q = Rational(params.n()) / x;
  return q - Rational(floor_nonneg(q));
}

DigitSequence digits(double x, NcfParams params, std::size_t max_len) {
  if (!std::isfinite(x) || x <= 0.0 || x > 1.0) {
    throw DomainError("digits: x must lie in (0,1]");
  }
  if (max_len == 0) throw DomainError("digits: max_len must be >= 1");
  DigitSequence out;
  out.digits.reserve(max_len);
  while (out.digits.size() < max_len) {
    const double q = params.nd() / x;
    const double a = std::floor(q);
    if (!(a < kMaxDigit)) throw DomainError("digit exceeds the 64-bit range");
    out.digits.push_back(static_cast<std::int64_t>(a));
    x = q - a;
    if (x == 0.0) {
      out.terminated = true;
      break;
    }
  }
  return out;
}

DigitSequence digits(const Rational& x, NcfParams params,
                     std::optional<std::size_t> max_len) {
  if (x <= 0 || x > 1) throw DomainError("digits: x must lie in (0,1]");
  if (max_len && *max_len == 0) throw DomainError("digits: max_len must be >= 1");
  DigitSequence out;
  Rational r = x;
  const Rational n(params.n());
  while (!max_len || out.digits.size() < *max_len) {
    const Rational q = n / r;
    const BigInt a = floor_nonneg(q);
    out.digits.push_back(to_digit(a));
    r = q - Rational(a);
    if (r == 0) {
      out.terminated = true;
      break;
    }
  }
  return out;
}

Rational evaluate(const DigitSequence& seq, NcfParams params) {
  require_digits(seq);
  const Rational n(params.n());
  Rational tail(0);
  for (auto it = seq.digits.rbegin(); it != seq.digits.rend(); ++it) {
    tail = n / (Rational(*it) + tail);
  }
  return tail;
}

std::vector<Rational> convergents(const DigitSequence& seq, NcfParams params) {
  require_digits(seq);
  const BigInt n(params.n());
  BigInt p_prev(1), p(0), q_prev(0), q(1);
  std::vector<Rational> out;
  out.reserve(seq.digits.size());
  for (auto a : seq.digits) {
    BigInt p_next = BigInt(a) * p + n * p_prev;
    BigInt q_next = BigInt(a) * q + n * q_prev;
    p_prev = std::exchange(p, std::move(p_next));
    q_prev = std::exchange(q, std::move(q_next));
    out.emplace_back(p, q);
  }
  return out;
}

double fixed_point(NcfParams params) {
  const double n = params.nd();
  // Rationalized form of (-N + sqrt(N^2 + 4N)) / 2, free of cancellation.
  return 2.0 * n / (n + std::sqrt(n * n + 4.0 * n));
}

}  // namespace ncf

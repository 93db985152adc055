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

#include "ncf/budget.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "ncf/errors.hpp"

namespace ncf {
namespace {

constexpr std::uint64_t kDefaultBudget = 50'000'000'000ULL;

std::uint64_t initial_budget() {
  if (const char* env = std::getenv("NCF_BUDGET")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0) return static_cast<std::uint64_t>(v);
  }
  return kDefaultBudget;
}

std::atomic<std::uint64_t>& budget_slot() {
  static std::atomic<std::uint64_t> slot{initial_budget()};
  return slot;
}

}  // namespace

std::uint64_t compute_budget() { return budget_slot().load(); }

void set_compute_budget(std::uint64_t units) { budget_slot().store(units); }

void charge_budget(double units, std::string_view what) {
  if (units > static_cast<double>(compute_budget())) {
    throw BudgetError(std::string(what) + " needs " + std::to_string(units) +
                      " work units, cap is " + std::to_string(compute_budget()) +
                      " (raise NCF_BUDGET)");
  }
}

}  // namespace ncf

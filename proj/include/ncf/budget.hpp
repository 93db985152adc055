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
#include <string_view>

namespace ncf {

// Global cap on abstract work units (roughly inner-loop iterations). The
// NCF_BUDGET environment variable overrides the default at first use.
std::uint64_t compute_budget();
void set_compute_budget(std::uint64_t units);

// Throws BudgetError naming `what` when `units` exceeds the cap.
void charge_budget(double units, std::string_view what);

}  // namespace ncf

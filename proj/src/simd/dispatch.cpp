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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ncf/errors.hpp"
#include "ncf/simd.hpp"

namespace ncf::simd {
namespace {

bool cpu_has_avx2() {
#if defined(NCF_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect_isa() {
  if (const char* env = std::getenv("NCF_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && cpu_has_avx2()) return Isa::avx2;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& isa_slot() {
  static std::atomic<Isa> slot{detect_isa()};
  return slot;
}

void require(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("SIMD ISA not available: " + std::string(isa_name(isa)));
  }
}

template <typename... Spans>
void require_same_size(std::size_t n, const Spans&... spans) {
  if (((spans.size() != n) || ...)) throw DomainError("simd kernel: span sizes differ");
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() { return isa_slot().load(); }

void force_isa(Isa isa) {
  require(isa);
  isa_slot().store(isa);
}

void transfer_branch_sum(Isa isa, std::span<const double> grid, std::int64_t n_param,
                         std::int64_t i_first, std::int64_t i_last,
                         std::span<const double> xs, std::span<double> out) {
  require(isa);
  require_same_size(xs.size(), out);
  if (grid.size() < 2) throw DomainError("transfer_branch_sum: grid needs >= 2 nodes");
  if (i_first < n_param) throw DomainError("transfer_branch_sum: branches start at N");
  const std::size_t resolution = grid.size() - 1;
  const double n = static_cast<double>(n_param);
#if defined(NCF_HAVE_AVX2_KERNELS)
  if (isa == Isa::avx2) {
    detail::transfer_branch_sum_avx2(grid.data(), resolution, n, i_first, i_last, xs.data(),
                                     out.data(), xs.size());
    return;
  }
#endif
  detail::transfer_branch_sum_scalar(grid.data(), resolution, n, i_first, i_last, xs.data(),
                                     out.data(), xs.size());
}

double weighted_l1(Isa isa, std::span<const double> weight, std::span<const double> a,
                   std::span<const double> b) {
  require(isa);
  require_same_size(weight.size(), a, b);
#if defined(NCF_HAVE_AVX2_KERNELS)
  if (isa == Isa::avx2) return detail::weighted_l1_avx2(weight.data(), a.data(), b.data(), a.size());
#endif
  return detail::weighted_l1_scalar(weight.data(), a.data(), b.data(), a.size());
}

double l1_distance(Isa isa, std::span<const double> a, std::span<const double> b) {
  require(isa);
  require_same_size(a.size(), b);
#if defined(NCF_HAVE_AVX2_KERNELS)
  if (isa == Isa::avx2) return detail::l1_distance_avx2(a.data(), b.data(), a.size());
#endif
  return detail::l1_distance_scalar(a.data(), b.data(), a.size());
}

void gauss_map_iterate(Isa isa, std::span<double> xs, std::int64_t n_param, int steps) {
  require(isa);
  const double n = static_cast<double>(n_param);
#if defined(NCF_HAVE_AVX2_KERNELS)
  if (isa == Isa::avx2) {
    detail::gauss_map_iterate_avx2(xs.data(), xs.size(), n, steps);
    return;
  }
#endif
  detail::gauss_map_iterate_scalar(xs.data(), xs.size(), n, steps);
}

}  // namespace ncf::simd

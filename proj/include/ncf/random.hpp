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
#include <random>

namespace ncf {

// Seedable uniform source. Streams with different ids drawn from one seed
// are independent, so Monte Carlo cells can be evaluated in any order and
// still reproduce bit-for-bit.
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  // Uniform on [0,1) with 53 random bits.
  double next();
  // Uniform on (0,1].
  double next_open_low() { return 1.0 - next(); }

  UniformStream split(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

// Deterministic child seed for a tagged sub-experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace ncf

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

#include "ncf/random.hpp"

namespace ncf {
namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

UniformStream::UniformStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double UniformStream::next() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

UniformStream UniformStream::split(std::uint64_t child) const {
  // Hashing keeps nested ids from colliding with flat ones.
  return UniformStream(seed_, splitmix(stream_id_ + 0x9e3779b97f4a7c15ULL * (child + 1)));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix(seed ^ splitmix(tag + 0x632be59bd9b4e019ULL));
}

}  // namespace ncf

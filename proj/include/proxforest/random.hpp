// Copyright 2026 The proxforest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace proxforest {

using Rng = std::mt19937_64;

/// Generator for an independent substream identified by `stream` (tree index,
/// iteration, ...). Identical (seed, stream) always yields the same sequence.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)};
  for (std::uint64_t s : stream) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// Seed for a derived stream, for APIs that take a seed rather than a Rng.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng rng = make_rng(seed, {stream, 0x5eedULL});
  return rng();
}

/// Uniform integer in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace proxforest

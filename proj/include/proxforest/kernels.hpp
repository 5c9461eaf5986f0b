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

// Data-parallel inner loops behind the distance measures. Each kernel has a
// scalar reference implementation and, where the target supports it, an AVX2
// (x86-64) or NEON (aarch64) variant. The variant is picked once at runtime
// from CPU features; PFGAP_SIMD=scalar|avx2|neon forces a choice.
//
// Every variant keeps the elementwise operations order-independent with
// respect to swapping its two inputs, so distances built on them are exactly
// symmetric. Variants differ from the scalar reference only by summation order
// (and FMA contraction), i.e. within a few ulps per accumulated term.

#include <cstddef>
#include <span>
#include <string_view>

namespace proxforest::kernels {

enum class Isa { scalar, avx2, neon };

struct MaskedSum {
  double sum = 0.0;
  std::size_t count = 0;  // coordinates where neither input is NaN
};

struct DotNorms {
  double dot = 0.0;
  double norm_a = 0.0;  // squared
  double norm_b = 0.0;  // squared
};

struct KernelTable {
  Isa isa;
  /// sum_i (a_i - b_i)^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  /// sum of (a_i - b_i)^2 over coordinates where neither value is NaN
  MaskedSum (*masked_squared_distance)(const double* a, const double* b, std::size_t n);
  DotNorms (*dot_norms)(const double* a, const double* b, std::size_t n);
  /// out_j += (x - ys_j)^2; one DTW cost row for one channel
  void (*accumulate_squared_difference)(double x, const double* ys, double* out, std::size_t n);
};

bool available(Isa isa);
std::string_view name(Isa isa);

/// Table for a specific variant; throws ConfigError if unavailable here.
const KernelTable& table(Isa isa);

/// Table used by the library.
const KernelTable& active();

/// Overrides the runtime choice. Not thread-safe with concurrent kernel use.
void select(Isa isa);

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

inline MaskedSum masked_squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().masked_squared_distance(a.data(), b.data(), a.size());
}

inline DotNorms dot_norms(std::span<const double> a, std::span<const double> b) {
  return active().dot_norms(a.data(), b.data(), a.size());
}

inline void accumulate_squared_difference(double x, std::span<const double> ys,
                                          std::span<double> out) {
  active().accumulate_squared_difference(x, ys.data(), out.data(), ys.size());
}

namespace detail {
const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace proxforest::kernels

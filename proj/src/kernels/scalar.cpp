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
#include <cmath>

#include "proxforest/kernels.hpp"

namespace proxforest::kernels::detail {
namespace {

double squared_distance(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

MaskedSum masked_squared_distance(const double* a, const double* b, std::size_t n) {
  MaskedSum out;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    const double d = a[i] - b[i];
    out.sum += d * d;
    ++out.count;
  }
  return out;
}

DotNorms dot_norms(const double* a, const double* b, std::size_t n) {
  DotNorms out;
  for (std::size_t i = 0; i < n; ++i) {
    out.dot += a[i] * b[i];
    out.norm_a += a[i] * a[i];
    out.norm_b += b[i] * b[i];
  }
  return out;
}

void accumulate_squared_difference(double x, const double* ys, double* out, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double d = x - ys[j];
    out[j] += d * d;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::scalar, squared_distance, masked_squared_distance, dot_norms,
                             accumulate_squared_difference};
  return t;
}

}  // namespace proxforest::kernels::detail

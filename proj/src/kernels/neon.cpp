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
#include <arm_neon.h>

#include <cmath>

#include "proxforest/kernels.hpp"

namespace proxforest::kernels::detail {
namespace {

double squared_distance(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc0 = vfmaq_f64(acc0, d0, d0);
    acc1 = vfmaq_f64(acc1, d1, d1);
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

MaskedSum masked_squared_distance(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  uint64x2_t count = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t va = vld1q_f64(a + i);
    const float64x2_t vb = vld1q_f64(b + i);
    // x == x is false exactly for NaN
    const uint64x2_t ordered = vandq_u64(vceqq_f64(va, va), vceqq_f64(vb, vb));
    const float64x2_t d = vreinterpretq_f64_u64(
        vandq_u64(vreinterpretq_u64_f64(vsubq_f64(va, vb)), ordered));
    acc = vfmaq_f64(acc, d, d);
    count = vsubq_u64(count, ordered);  // all-ones lanes are -1
  }
  MaskedSum out{vaddvq_f64(acc), static_cast<std::size_t>(vaddvq_u64(count))};
  for (; i < n; ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    const double d = a[i] - b[i];
    out.sum += d * d;
    ++out.count;
  }
  return out;
}

DotNorms dot_norms(const double* a, const double* b, std::size_t n) {
  float64x2_t dot = vdupq_n_f64(0.0);
  float64x2_t na = vdupq_n_f64(0.0);
  float64x2_t nb = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t va = vld1q_f64(a + i);
    const float64x2_t vb = vld1q_f64(b + i);
    dot = vfmaq_f64(dot, va, vb);
    na = vfmaq_f64(na, va, va);
    nb = vfmaq_f64(nb, vb, vb);
  }
  DotNorms out{vaddvq_f64(dot), vaddvq_f64(na), vaddvq_f64(nb)};
  for (; i < n; ++i) {
    out.dot += a[i] * b[i];
    out.norm_a += a[i] * a[i];
    out.norm_b += b[i] * b[i];
  }
  return out;
}

void accumulate_squared_difference(double x, const double* ys, double* out, std::size_t n) {
  const float64x2_t vx = vdupq_n_f64(x);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t d = vsubq_f64(vx, vld1q_f64(ys + j));
    vst1q_f64(out + j, vfmaq_f64(vld1q_f64(out + j), d, d));
  }
  for (; j < n; ++j) {
    const double d = x - ys[j];
    out[j] = std::fma(d, d, out[j]);
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable t{Isa::neon, squared_distance, masked_squared_distance, dot_norms,
                             accumulate_squared_difference};
  return t;
}

}  // namespace proxforest::kernels::detail

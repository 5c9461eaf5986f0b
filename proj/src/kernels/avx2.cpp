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
#include <immintrin.h>

#include <bit>
#include <cmath>

#include "proxforest/kernels.hpp"

namespace proxforest::kernels::detail {
namespace {

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
  }
  double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

MaskedSum masked_squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    const __m256d ordered = _mm256_cmp_pd(va, vb, _CMP_ORD_Q);
    const __m256d d = _mm256_and_pd(_mm256_sub_pd(va, vb), ordered);
    acc = _mm256_fmadd_pd(d, d, acc);
    count += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(ordered))));
  }
  MaskedSum out{horizontal_sum(acc), count};
  for (; i < n; ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    const double d = a[i] - b[i];
    out.sum += d * d;
    ++out.count;
  }
  return out;
}

DotNorms dot_norms(const double* a, const double* b, std::size_t n) {
  __m256d dot = _mm256_setzero_pd();
  __m256d na = _mm256_setzero_pd();
  __m256d nb = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    dot = _mm256_fmadd_pd(va, vb, dot);
    na = _mm256_fmadd_pd(va, va, na);
    nb = _mm256_fmadd_pd(vb, vb, nb);
  }
  DotNorms out{horizontal_sum(dot), horizontal_sum(na), horizontal_sum(nb)};
  for (; i < n; ++i) {
    out.dot += a[i] * b[i];
    out.norm_a += a[i] * a[i];
    out.norm_b += b[i] * b[i];
  }
  return out;
}

void accumulate_squared_difference(double x, const double* ys, double* out, std::size_t n) {
  const __m256d vx = _mm256_set1_pd(x);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d d = _mm256_sub_pd(vx, _mm256_loadu_pd(ys + j));
    _mm256_storeu_pd(out + j, _mm256_fmadd_pd(d, d, _mm256_loadu_pd(out + j)));
  }
  for (; j < n; ++j) {
    const double d = x - ys[j];
    out[j] = std::fma(d, d, out[j]);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{Isa::avx2, squared_distance, masked_squared_distance, dot_norms,
                             accumulate_squared_difference};
  return t;
}

}  // namespace proxforest::kernels::detail

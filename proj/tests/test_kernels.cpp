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
#include <limits>
#include <vector>

#include "doctest.h"
#include "proxforest/kernels.hpp"
#include "support.hpp"

using namespace proxforest;
namespace k = proxforest::kernels;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<k::Isa> accelerated() {
  std::vector<k::Isa> out;
  for (k::Isa isa : {k::Isa::avx2, k::Isa::neon}) {
    if (k::available(isa)) out.push_back(isa);
  }
  return out;
}

// Relative agreement; vector variants reassociate the sums.
void check_close(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) {
    CHECK(std::isnan(a) == std::isnan(b));
    return;
  }
  CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
}

}  // namespace

TEST_CASE("scalar kernels match their definitions") {
  const auto& s = k::table(k::Isa::scalar);
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {1.0, 5.0, kNan};
  CHECK(s.squared_distance(a, a, 3) == 0.0);
  const auto m = s.masked_squared_distance(a, b, 3);
  CHECK(m.sum == 9.0);
  CHECK(m.count == 2);
  const auto dn = s.dot_norms(a, a, 3);
  CHECK(dn.dot == 14.0);
  CHECK(dn.norm_a == 14.0);
  double out[3] = {1.0, 1.0, 1.0};
  s.accumulate_squared_difference(2.0, a, out, 3);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 1.0);
  CHECK(out[2] == 2.0);
}

TEST_CASE("accelerated kernels agree with the scalar reference") {
  const auto isas = accelerated();
  if (isas.empty()) {
    MESSAGE("no accelerated kernel on this machine");
    return;
  }
  const auto& ref = k::table(k::Isa::scalar);
  Rng rng = make_rng(11);
  std::bernoulli_distribution hole(0.2);
  for (k::Isa isa : isas) {
    const auto& t = k::table(isa);
    CAPTURE(k::name(isa));
    // Lengths cover empty input, remainders and several vector blocks.
    for (std::size_t n = 0; n < 70; ++n) {
      for (int rep = 0; rep < 20; ++rep) {
        auto a = pftest::random_vector(rng, n);
        auto b = pftest::random_vector(rng, n);
        check_close(t.squared_distance(a.data(), b.data(), n), ref.squared_distance(a.data(), b.data(), n));
        const auto dn = t.dot_norms(a.data(), b.data(), n), dr = ref.dot_norms(a.data(), b.data(), n);
        check_close(dn.dot, dr.dot);
        check_close(dn.norm_a, dr.norm_a);
        check_close(dn.norm_b, dr.norm_b);
        std::vector<double> o1(n, 0.5), o2(n, 0.5);
        t.accumulate_squared_difference(0.3, b.data(), o1.data(), n);
        ref.accumulate_squared_difference(0.3, b.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) check_close(o1[i], o2[i]);
        for (auto& x : a) {
          if (hole(rng)) x = kNan;
        }
        for (auto& x : b) {
          if (hole(rng)) x = kNan;
        }
        const auto m1 = t.masked_squared_distance(a.data(), b.data(), n);
        const auto m2 = ref.masked_squared_distance(a.data(), b.data(), n);
        CHECK(m1.count == m2.count);
        check_close(m1.sum, m2.sum);
      }
    }
  }
}

TEST_CASE("kernel selection switches the active table") {
  const k::Isa before = k::active().isa;
  k::select(k::Isa::scalar);
  CHECK(k::active().isa == k::Isa::scalar);
  k::select(before);
  CHECK(k::active().isa == before);
}

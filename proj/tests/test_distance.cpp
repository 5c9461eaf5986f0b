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
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "doctest.h"
#include "proxforest/distance.hpp"
#include "proxforest/error.hpp"
#include "proxforest/meta.hpp"
#include "support.hpp"

using namespace proxforest;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr int kPropertyCases = 10000;

// Minimum over every monotone, continuous alignment path inside the band
// |i - j| <= max(w, |n - m|), enumerated recursively.
double dtw_oracle(const Grid& x, const Grid& y, DtwWindow w) {
  const std::size_t n = x.length(), m = y.length();
  const std::size_t gap = n > m ? n - m : m - n;
  const std::size_t band = w ? std::max(*w, gap) : std::max(n, m);
  auto cell = [&](std::size_t i, std::size_t j) {
    double c = 0.0;
    for (std::size_t ch = 0; ch < x.channels(); ++ch) c += (x.at(ch, i) - y.at(ch, j)) * (x.at(ch, i) - y.at(ch, j));
    return c;
  };
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    if ((i > j ? i - j : j - i) > band) return;
    acc += cell(i, j);
    if (i == n - 1 && j == m - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

Grid one_channel(std::vector<double> v) {
  const std::size_t n = v.size();
  return Grid(1, n, std::move(v));
}

Instance grid_instance(std::string id, Grid g) { return Instance{std::move(id), std::move(g)}; }

}  // namespace

TEST_CASE("euclidean examples") {
  const std::vector<double> a{1, 2, 3};
  CHECK(euclidean(a, a) == 0.0);
  CHECK(euclidean(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == 5.0);
  const std::vector<double> x{1, kNan, 2}, y{1, 5, 4};
  CHECK(euclidean(x, y, MissingPolicy::skip) == 2.0);
  CHECK(euclidean(x, y, MissingPolicy::skip, true) == doctest::Approx(2.0 * std::sqrt(1.5)));
  CHECK_THROWS_AS(euclidean(x, y, MissingPolicy::error), DataError);
  CHECK_THROWS_AS(euclidean(a, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("euclidean with no mutually observed coordinate is unreachable") {
  const std::vector<double> x{1, kNan}, y{kNan, 2};
  const double d = euclidean(x, y);
  CHECK(std::isinf(d));
  CHECK(d > 1e300);
}

TEST_CASE("cosine examples") {
  CHECK(cosine(std::vector<double>{2, 3}, std::vector<double>{2, 3}) == 0.0);
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(1.0));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{-1, 0}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0}), DataError);
}

TEST_CASE("dtw hand examples") {
  CHECK(dtw_univariate(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 2.0);
  CHECK(dtw_univariate(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 2, 3}) == 0.0);
  CHECK_THROWS_AS(dtw_univariate(std::vector<double>{}, std::vector<double>{1}), DataError);
}

TEST_CASE("dtw matches the brute-force alignment oracle") {
  Rng rng = make_rng(3);
  std::uniform_int_distribution<std::size_t> len(1, 6), chans(1, 3), win(0, 3);
  for (int rep = 0; rep < 400; ++rep) {
    const std::size_t p = chans(rng);
    const Grid x = pftest::random_series(rng, p, len(rng));
    const Grid y = pftest::random_series(rng, p, len(rng));
    const DtwWindow w = rep % 2 ? DtwWindow{win(rng)} : std::nullopt;
    CAPTURE(rep);
    CHECK(dtw_dependent(x, y, w) == doctest::Approx(dtw_oracle(x, y, w)).epsilon(1e-12));
    double per_channel = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
      per_channel += dtw_oracle(one_channel({x.channel(c).begin(), x.channel(c).end()}),
                                one_channel({y.channel(c).begin(), y.channel(c).end()}), w);
    }
    CHECK(dtw_independent(x, y, w) == doctest::Approx(per_channel).epsilon(1e-12));
  }
}

TEST_CASE("dtw with a zero window on equal lengths is the diagonal sum") {
  Rng rng = make_rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    const Grid x = pftest::random_series(rng, 2, 7), y = pftest::random_series(rng, 2, 7);
    double s = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t t = 0; t < 7; ++t) s += (x.at(c, t) - y.at(c, t)) * (x.at(c, t) - y.at(c, t));
    }
    CHECK(dtw_dependent(x, y, 0) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("single-channel dtw_i equals dtw_d") {
  Rng rng = make_rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const Grid x = pftest::random_series(rng, 1, 5), y = pftest::random_series(rng, 1, 8);
    CHECK(dtw_independent(x, y) == dtw_dependent(x, y));
  }
}

TEST_CASE("dtw violates the triangle inequality on a small triple") {
  // Search integer triples until a violation turns up; the measure is not a metric.
  Rng rng = make_rng(6);
  std::uniform_int_distribution<int> value(0, 3);
  std::uniform_int_distribution<std::size_t> len(1, 4);
  bool found = false;
  std::vector<double> a, b, c;
  for (int rep = 0; rep < 20000 && !found; ++rep) {
    auto draw = [&] {
      std::vector<double> v(len(rng));
      for (double& x : v) x = value(rng);
      return v;
    };
    a = draw();
    b = draw();
    c = draw();
    found = dtw_univariate(a, c) > dtw_univariate(a, b) + dtw_univariate(b, c);
  }
  REQUIRE(found);
  CHECK(dtw_univariate(a, c) > dtw_univariate(a, b) + dtw_univariate(b, c));
  // A fixed witness: [1] warps onto [1, 1] for free, [0] pays twice.
  const std::vector<double> x{0}, y{1}, z{1, 1};
  CHECK(dtw_univariate(x, z) == 2.0);
  CHECK(dtw_univariate(x, y) + dtw_univariate(y, z) == 1.0);
}

TEST_CASE("wl distance hand values") {
  const Graph triangle({0, 0, 0}, {{0, 1}, {1, 2}, {0, 2}});
  const Graph path({0, 0, 0}, {{0, 1}, {1, 2}});
  CHECK(wl_distance(triangle, path, 0) == 0.0);
  // Round 1 relabels the triangle {X,X,X} and the path {Y,X,Y}: L1 = 4 over (3 + 3) * 2.
  CHECK(wl_distance(triangle, path, 1) == doctest::Approx(1.0 / 3.0));
  // One extra isolated node with a new label: the round-0 histograms differ by 1.
  const Graph plus({0, 0, 0, 7}, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(wl_distance(triangle, plus, 0) == doctest::Approx(1.0 / 7.0));
  CHECK_THROWS_AS(wl_distance(triangle, path, -1), ConfigError);
}

TEST_CASE("wl distance is invariant under node permutation") {
  Rng rng = make_rng(7);
  for (int rep = 0; rep < 300; ++rep) {
    const Graph g = pftest::random_graph(rng, 1 + rep % 9, 0.4, 3);
    const Graph h = pftest::permuted(g, rng);
    const Graph other = pftest::random_graph(rng, 1 + rep % 7, 0.4, 3);
    for (int depth = 0; depth <= 3; ++depth) {
      CHECK(wl_distance(g, h, depth) == 0.0);
      CHECK(wl_distance(g, other, depth) == wl_distance(h, other, depth));
    }
  }
}

TEST_CASE("distance contract holds for every built-in measure") {
  Rng rng = make_rng(8);
  std::uniform_int_distribution<std::size_t> len(1, 12), dim(1, 9), nodes(1, 10);
  std::bernoulli_distribution hole(0.15);

  auto contract = [](const DistanceMeasure& d, const Instance& x, const Instance& y) {
    const double xy = d(x, y), yx = d(y, x);
    if (xy != yx) return false;
    if (!(xy >= 0.0)) return false;
    if (d(x, x) != 0.0 || d(y, y) != 0.0) return false;
    return true;
  };

  SUBCASE("euclidean") {
    const auto d = registry_resolve(DistanceSpec::parse("euclidean"));
    int bad = 0;
    for (int rep = 0; rep < kPropertyCases; ++rep) {
      const std::size_t n = dim(rng);
      auto a = pftest::random_vector(rng, n), b = pftest::random_vector(rng, n);
      // Valid inputs keep at least one observed coordinate.
      for (auto* v : {&a, &b}) {
        for (std::size_t i = 1; i < n; ++i) {
          if (hole(rng)) (*v)[i] = kNan;
        }
      }
      bad += !contract(*d, grid_instance("a", Grid(n, 1, a)), grid_instance("b", Grid(n, 1, b)));
    }
    CHECK(bad == 0);
  }
  SUBCASE("cosine") {
    const auto d = registry_resolve(DistanceSpec::parse("cosine"));
    int bad = 0;
    for (int rep = 0; rep < kPropertyCases; ++rep) {
      const std::size_t n = dim(rng);
      const auto a = pftest::random_vector(rng, n), b = pftest::random_vector(rng, n);
      bad += !contract(*d, grid_instance("a", Grid(n, 1, a)), grid_instance("b", Grid(n, 1, b)));
      const double v = (*d)(grid_instance("a", Grid(n, 1, a)), grid_instance("b", Grid(n, 1, b)));
      bad += v > 2.0;
    }
    CHECK(bad == 0);
  }
  for (const char* spec : {"dtw_d", "dtw_i", "dtw_d:w=2", "dtw_i:w=1"}) {
    SUBCASE(spec) {
      const auto d = registry_resolve(DistanceSpec::parse(spec));
      int bad = 0;
      for (int rep = 0; rep < kPropertyCases; ++rep) {
        const std::size_t p = 1 + rep % 3;
        bad += !contract(*d, grid_instance("a", pftest::random_series(rng, p, len(rng))),
                         grid_instance("b", pftest::random_series(rng, p, len(rng))));
      }
      CHECK(bad == 0);
    }
  }
  SUBCASE("wl") {
    const auto d = registry_resolve(DistanceSpec::parse("wl:h=2"));
    int bad = 0;
    for (int rep = 0; rep < kPropertyCases; ++rep) {
      const Instance a{"a", pftest::random_graph(rng, nodes(rng), 0.3, 3)};
      const Instance b{"b", pftest::random_graph(rng, nodes(rng), 0.3, 3)};
      bad += !contract(*d, a, b);
      bad += (*d)(a, b) > 1.0;
    }
    CHECK(bad == 0);
  }
  SUBCASE("meta_class and meta_prob") {
    auto labels = std::make_shared<PredictionTable>();
    auto probs = std::make_shared<PredictionTable>();
    probs->set_columns({"a", "b", "c"});
    std::uniform_int_distribution<int> cls(0, 2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      labels->add_label("i" + std::to_string(i), "c" + std::to_string(cls(rng)));
      std::vector<double> row{u(rng), u(rng), u(rng)};
      const double s = row[0] + row[1] + row[2];
      for (double& x : row) x /= s;
      probs->add_probabilities("i" + std::to_string(i), row);
    }
    DistanceSpec ls{"meta_class", {}, labels}, ps{"meta_prob", {}, probs};
    const auto dl = registry_resolve(ls), dp = registry_resolve(ps);
    std::uniform_int_distribution<int> id(0, 199);
    int bad = 0;
    for (int rep = 0; rep < kPropertyCases; ++rep) {
      const Instance a{"i" + std::to_string(id(rng)), Grid(1, 1, {0.0})};
      const Instance b{"i" + std::to_string(id(rng)), Grid(1, 1, {0.0})};
      bad += !contract(*dl, a, b);
      bad += !contract(*dp, a, b);
      const double v = (*dl)(a, b);
      bad += v != 0.0 && v != 1.0;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("meta distances follow the table") {
  PredictionTable labels;
  labels.add_label("x", "cat");
  labels.add_label("y", "cat");
  labels.add_label("z", "dog");
  const Instance x{"x", Grid(1, 1, {0.0})}, y{"y", Grid(1, 1, {9.0})}, z{"z", Grid(1, 1, {0.0})};
  CHECK(meta_class_distance(x, y, labels) == 0.0);
  CHECK(meta_class_distance(x, z, labels) == 1.0);
  const Instance unknown{"w", Grid(1, 1, {0.0})};
  CHECK_THROWS_AS(meta_class_distance(x, unknown, labels), LookupError);

  PredictionTable probs;
  probs.set_columns({"a", "b"});
  probs.add_probabilities("x", {1.0, 0.0});
  probs.add_probabilities("y", {0.0, 1.0});
  CHECK(meta_prob_distance(x, y, probs) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(probs.add_probabilities("z", {0.7, 0.7}), DataError);
}

TEST_CASE("registry resolves built-ins and rejects bad specs") {
  auto& r = DistanceRegistry::global();
  for (const char* name : {"euclidean", "cosine", "dtw_d", "dtw_i", "wl", "meta_class", "meta_prob"}) {
    CHECK(r.contains(name));
  }
  CHECK(r.supports("dtw_d", PayloadKind::series));
  CHECK_FALSE(r.supports("dtw_d", PayloadKind::graph));
  CHECK_THROWS_AS(registry_resolve(DistanceSpec::parse("nosuch")), ConfigError);
  CHECK_THROWS_AS(registry_resolve(DistanceSpec::parse("dtw_d:window=3")), ConfigError);
  CHECK_THROWS_AS(registry_resolve(DistanceSpec::parse("dtw_d:w=-1")), ConfigError);
  CHECK_THROWS_AS(registry_resolve(DistanceSpec::parse("wl:h=x")), ConfigError);
  CHECK_THROWS_AS(registry_resolve(DistanceSpec::parse("meta_class")), ConfigError);

  const auto banded = registry_resolve(DistanceSpec::parse("dtw_d:w=3"));
  const Instance a{"a", one_channel({0, 1, 2, 3, 4, 5, 6, 7})}, b{"b", one_channel({7, 6, 5, 4, 3, 2, 1, 0})};
  CHECK((*banded)(a, b) == dtw_dependent(a.grid(), b.grid(), 3));
}

TEST_CASE("distance specs parse and print canonically") {
  const DistanceSpec s = DistanceSpec::parse("dtw_d:w=3");
  CHECK(s.name == "dtw_d");
  CHECK(s.params.at("w") == "3");
  const DistanceSpec t = DistanceSpec::parse("euclidean:rescale=true,missing=skip");
  CHECK(t.to_string() == "euclidean:missing=skip,rescale=true");
  CHECK(DistanceSpec::parse(t.to_string()) == t);
  CHECK_THROWS_AS(DistanceSpec::parse(""), ConfigError);
  CHECK_THROWS_AS(DistanceSpec::parse("dtw_d:w"), ConfigError);
}

TEST_CASE("plugins register at runtime") {
  auto& r = DistanceRegistry::global();
  if (!r.contains("test_manhattan")) {
    r.add({"test_manhattan",
           {PayloadKind::vector},
           {},
           "L1 distance",
           [](const DistanceSpec& spec) {
             return make_distance(spec, [](const Instance& a, const Instance& b) {
               double s = 0.0;
               for (std::size_t i = 0; i < a.grid().size(); ++i) s += std::abs(a.grid().values()[i] - b.grid().values()[i]);
               return s;
             });
           }});
  }
  const auto d = registry_resolve(DistanceSpec::parse("test_manhattan"));
  CHECK((*d)(Instance{"a", Grid(2, 1, {0, 0})}, Instance{"b", Grid(2, 1, {1, -2})}) == 3.0);
  CHECK_THROWS_AS(r.add({"euclidean", {PayloadKind::vector}, {}, "", nullptr}), ConfigError);
}

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
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "doctest.h"
#include "proxforest/bench.hpp"
#include "proxforest/error.hpp"
#include "proxforest/forest.hpp"
#include "proxforest/gap.hpp"
#include "proxforest/impute.hpp"
#include "support.hpp"

using namespace proxforest;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

ForestConfig forest(std::size_t trees, std::uint64_t seed) {
  ForestConfig c;
  c.n_trees = trees;
  c.distances = {DistanceSpec::parse("euclidean")};
  c.seed = seed;
  return c;
}

Dataset series(const std::vector<std::vector<double>>& channels) {
  const std::size_t len = channels[0].size();
  std::vector<double> flat;
  for (const auto& c : channels) flat.insert(flat.end(), c.begin(), c.end());
  Grid g(channels.size(), len, flat);
  for (std::size_t j = 0; j < channels.size(); ++j) {
    for (std::size_t t = 0; t < len; ++t) {
      if (std::isnan(channels[j][t])) g.mark_missing(j, t);
    }
  }
  return pftest::series_dataset({g}, {0});
}

// Every imputed continuous entry lies within the range of observed values of its column.
void check_hull(const Dataset& original, const Dataset& imputed) {
  for (std::size_t j = 0; j < original.feature_count(); ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& inst : original.instances) {
      const Grid& g = inst.grid();
      for (std::size_t t = 0; t < g.length(); ++t) {
        if (!g.is_missing(j, t)) {
          lo = std::min(lo, g.at(j, t));
          hi = std::max(hi, g.at(j, t));
        }
      }
    }
    for (std::size_t n = 0; n < original.size(); ++n) {
      const Grid& g = original.instances[n].grid();
      for (std::size_t t = 0; t < g.length(); ++t) {
        if (!g.is_missing(j, t)) continue;
        const double v = imputed.instances[n].grid().at(j, t);
        CHECK(v >= lo - 1e-12 * std::max(1.0, std::abs(lo)));
        CHECK(v <= hi + 1e-12 * std::max(1.0, std::abs(hi)));
      }
    }
  }
}

void check_selection(const ImputationReport& r) {
  REQUIRE(!r.iterations.empty());
  const bool lower = lower_is_better(r.selection_metric);
  for (const auto& it : r.iterations) {
    if (std::isnan(it.score)) continue;
    if (lower) {
      CHECK(r.iterations[r.selected].score <= it.score);
    } else {
      CHECK(r.iterations[r.selected].score >= it.score);
    }
  }
}

}  // namespace

TEST_CASE("mean and median initialization") {
  const Dataset d = pftest::vector_dataset({{1, 5}, {3, kNan}, {kNan, 7}, {10, 9}}, {0, 0, 1, 1});
  ImputeConfig c;
  const Dataset m = initialize(d, c);
  CHECK(m.instances[2].grid().at(0, 0) == doctest::Approx(14.0 / 3.0));
  CHECK(m.instances[1].grid().at(1, 0) == 7.0);
  CHECK(m.instances[1].grid().is_missing(1, 0));
  c.init = InitMethod::median;
  const Dataset md = initialize(d, c);
  CHECK(md.instances[2].grid().at(0, 0) == 3.0);
  CHECK(md.instances[1].grid().at(1, 0) == 7.0);
  const Dataset even = pftest::vector_dataset({{1}, {3}, {5}, {100}, {kNan}}, {0, 0, 0, 0, 0});
  CHECK(initialize(even, c).instances[4].grid().at(0, 0) == 4.0);

  const Dataset pair = pftest::vector_dataset({{1}, {3}, {kNan}}, {0, 0, 0});
  CHECK(initialize(pair, ImputeConfig{}).instances[2].grid().at(0, 0) == 2.0);
}

TEST_CASE("label-conditioned initialization falls back to the global column") {
  const Dataset d = pftest::vector_dataset({{1, 1}, {3, kNan}, {kNan, 2}, {10, kNan}, {20, 8}, {kNan, 4}},
                                           {0, 0, 0, 1, 1, 2});
  ImputeConfig c;
  c.condition_on_label = true;
  const Dataset m = initialize(d, c);
  CHECK(m.instances[2].grid().at(0, 0) == 2.0);   // class 0 mean
  CHECK(m.instances[1].grid().at(1, 0) == 1.5);   // class 0 mean
  CHECK(m.instances[3].grid().at(1, 0) == 8.0);   // class 1 mean
  CHECK(m.instances[5].grid().at(0, 0) == 8.5);   // class 2 has nothing observed: global mean
}

TEST_CASE("knn initialization averages the nearest observed donors") {
  const Dataset d = pftest::vector_dataset({{0, 0, 1}, {0, 1, 2}, {5, 5, 30}, {0, 0, kNan}}, {0, 0, 0, 0});
  ImputeConfig c;
  c.init = InitMethod::knn;
  c.knn_k = 2;
  CHECK(initialize(d, c).instances[3].grid().at(2, 0) == 1.5);
}

TEST_CASE("linear initialization interpolates along time") {
  ImputeConfig c;
  c.init = InitMethod::linear;
  const Dataset a = initialize(series({{0, kNan, 2}}), c);
  CHECK(a.instances[0].grid().at(0, 1) == 1.0);
  const Dataset b = initialize(series({{kNan, 3, kNan, kNan, 9, kNan}}), c);
  const Grid& g = b.instances[0].grid();
  CHECK(g.at(0, 0) == 3.0);
  CHECK(g.at(0, 2) == 5.0);
  CHECK(g.at(0, 3) == 7.0);
  CHECK(g.at(0, 5) == 9.0);
  CHECK_THROWS_AS(initialize(pftest::vector_dataset({{1}, {kNan}}, {0, 0}), c), ConfigError);
}

TEST_CASE("a column with nothing observed cannot be initialized") {
  const Dataset d = pftest::vector_dataset({{1, kNan}, {2, kNan}}, {0, 1});
  CHECK_THROWS_AS(initialize(d, ImputeConfig{}), DataError);
}

TEST_CASE("gap pass renormalizes over observed donors") {
  const Dataset d = pftest::vector_dataset({{kNan, kNan, kNan}, {4, 10, kNan}, {8, kNan, kNan}}, {0, 0, 0});
  Dataset fallback = d;
  fallback.instances[0].grid().at(2, 0) = -1.0;
  GapMatrix gap;
  gap.kind = GapKind::oob;
  gap.row_count = gap.column_count = 3;
  gap.rows.push_back(GapRow{0, {1, 2}, {0.25, 0.75}});
  const PassResult r = gap_pass(gap, d, d, fallback, false, 1);
  const Grid& g = r.imputed.instances[0].grid();
  CHECK(g.at(0, 0) == 7.0);
  CHECK(g.at(1, 0) == 10.0);
  CHECK(g.at(2, 0) == -1.0);
  CHECK(r.imputed_entries == 2);
  CHECK(r.fallbacks == 1 + 1 + 2);  // rows 1 and 2 have no proximity row
  CHECK(r.hull_violations == 0);
}

TEST_CASE("categorical entries take the weighted vote") {
  Dataset d = pftest::vector_dataset({{kNan}, {1}, {2}, {2}}, {0, 0, 0, 0});
  d.categorical = {true};
  GapMatrix gap;
  gap.row_count = gap.column_count = 4;
  gap.rows.push_back(GapRow{0, {1, 2, 3}, {0.5, 0.3, 0.2}});
  CHECK(gap_pass(gap, d, d, d, false, 1).imputed.instances[0].grid().at(0, 0) == 1.0);
  gap.rows[0].values = {0.4, 0.3, 0.3};
  CHECK(gap_pass(gap, d, d, d, false, 1).imputed.instances[0].grid().at(0, 0) == 2.0);
  gap.rows[0].values = {0.5, 0.25, 0.25};
  CHECK(gap_pass(gap, d, d, d, false, 1).imputed.instances[0].grid().at(0, 0) == 1.0);
}

TEST_CASE("pseudo-missing entries are scored and never overwritten") {
  const Dataset d = pftest::vector_dataset({{1, 2}, {3, 4}}, {0, 0});
  GapMatrix gap;
  gap.row_count = gap.column_count = 2;
  gap.rows.push_back(GapRow{0, {1}, {1.0}});
  gap.rows.push_back(GapRow{1, {0}, {1.0}});
  const PassResult r = gap_pass(gap, d, d, d, true, 1);
  CHECK(r.imputed.instances == d.instances);
  CHECK(r.pseudo_entries == 4);
  CHECK(r.pseudo_truth[0] == std::vector<double>{1, 3});
  CHECK(r.pseudo_pred[0] == std::vector<double>{3, 1});
}

TEST_CASE("internal scores") {
  const std::vector<double> t{1, 2, 3, 4}, p{1, 2, 3, 5};
  CHECK(internal_score(t, t, ImputeMetric::r2) == 1.0);
  CHECK(internal_score(t, p, ImputeMetric::r2) == doctest::Approx(1.0 - 1.0 / 5.0));
  CHECK(internal_score(t, p, ImputeMetric::rmse) == doctest::Approx(0.5));
  CHECK(internal_score(t, p, ImputeMetric::mae) == doctest::Approx(0.25));
  CHECK(internal_score(t, p, ImputeMetric::accuracy) == 0.75);
  // classes 1,2,3 perfect; 4 and 5 each F1 0
  CHECK(internal_score(t, p, ImputeMetric::f1) == doctest::Approx(3.0 / 5.0));
  CHECK(std::isnan(internal_score(std::vector<double>{2, 2}, std::vector<double>{1, 2}, ImputeMetric::r2)));
}

TEST_CASE("duplicate cohorts impute the cohort value") {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({1, 2, 3});
    labels.push_back(0);
  }
  for (int i = 0; i < 10; ++i) {
    rows.push_back({7, 8, 9});
    labels.push_back(1);
  }
  rows[0][0] = kNan;
  const Dataset d = pftest::vector_dataset(rows, labels);
  ImputeConfig c;
  c.iterations = 3;
  const ImputationReport r = gap_impute_train(d, forest(25, 1), c, {1});
  CHECK(r.imputed.instances[0].grid().at(0, 0) == 1.0);
  for (const auto& it : r.iterations) CHECK(it.imputed_entries + it.fallbacks == 1);

  const Forest f = Forest::fit(r.imputed, forest(25, 2), {1});
  const Dataset test = pftest::vector_dataset({{7, kNan, 9}, {kNan, 2, 3}}, {1, 0});
  const TestImputation ti = gap_impute_test(r.imputed, test, f, c);
  CHECK(ti.imputed.instances[0].grid().at(1, 0) == 8.0);
  CHECK(ti.imputed.instances[1].grid().at(0, 0) == 1.0);
  CHECK(ti.initialized.instances[0].grid().at(1, 0) == 5.0);
}

TEST_CASE("no missing entries leave the data unchanged") {
  const Dataset d = make_blobs(60, 2, 3, 2.0, 3);
  const ImputationReport r = gap_impute_train(d, forest(10, 0), ImputeConfig{}, {1});
  CHECK(r.imputed.instances == d.instances);
  for (const auto& it : r.iterations) {
    CHECK(it.imputed_entries == 0);
    CHECK(it.pseudo_entries > 0);
    CHECK(std::isfinite(it.score));
  }
  const Forest f = Forest::fit(d, forest(10, 0), {1});
  CHECK(gap_impute_test(d, d, f, ImputeConfig{}).imputed.instances == d.instances);
}

TEST_CASE("hull and selection invariants hold across runs") {
  int runs = 0;
  for (std::uint64_t seed : {0, 1, 2}) {
    const Dataset full = sample_vmf_clusters(60, 8.0, seed);
    const Split s = train_test_split(full, 0.5, true, seed);
    const Dataset train = inject_mcar(s.train, 0.4, seed + 10);
    const Dataset test = inject_mcar(s.test, 0.4, seed + 20);
    for (ImputeMetric m : {ImputeMetric::r2, ImputeMetric::rmse, ImputeMetric::mae}) {
      for (InitMethod init : {InitMethod::mean, InitMethod::median, InitMethod::knn}) {
        ImputeConfig c;
        c.metric = m;
        c.init = init;
        c.iterations = 4;
        const ImputationReport r = gap_impute_train(train, forest(11, seed), c, {1});
        ++runs;
        check_selection(r);
        CHECK(r.selection_metric == m);
        for (const auto& it : r.iterations) CHECK(it.hull_violations == 0);
        check_hull(train, r.imputed);
        const TestImputation ti = gap_impute_test(r.imputed, test, *r.forest, c);
        CHECK(ti.hull_violations == 0);
        for (const auto& inst : ti.imputed.instances) CHECK_FALSE(inst.grid().has_unfilled());
      }
    }
  }
  CHECK(runs == 27);
}

TEST_CASE("series imputation on a shared time grid") {
  Rng rng = make_rng(5);
  std::vector<Grid> grids;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    Grid g = pftest::random_series(rng, 2, 8);
    for (std::size_t t = 0; t < 8; ++t) g.at(0, t) += (i % 2) * 3.0;
    grids.push_back(g);
    labels.push_back(i % 2);
  }
  const Dataset d = inject_mcar(pftest::series_dataset(grids, labels), 0.2, 1);
  ImputeConfig c;
  c.init = InitMethod::linear;
  c.iterations = 3;
  ForestConfig fc = forest(11, 3);
  fc.distances = {DistanceSpec::parse("dtw_d")};
  const ImputationReport r = gap_impute_train(d, fc, c, {1});
  check_selection(r);
  check_hull(d, r.imputed);

  Rng rng2 = make_rng(6);
  const Dataset other = pftest::series_dataset({pftest::random_series(rng2, 2, 5)}, {0});
  CHECK_THROWS_AS(gap_impute_test(r.imputed, other, *r.forest, c), DataError);
}

TEST_CASE("test imputation requires the forest's training set") {
  const Dataset a = make_blobs(30, 2, 2, 1.0, 0);
  Dataset b = a;
  b.instances[3].id = "renamed";
  const Forest f = Forest::fit(a, forest(3, 0), {1});
  CHECK_THROWS_AS(gap_impute_test(b, a, f, ImputeConfig{}), DataError);
  CHECK_THROWS_AS(gap_impute_test(a.subset(std::vector<std::size_t>{0, 1, 2}), a, f, ImputeConfig{}), DataError);
}

TEST_CASE("undefined scores are never selected") {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) {
    rows.push_back({5.0, 1.0});
    labels.push_back(i % 2);
  }
  rows[3][1] = kNan;
  const ImputationReport r = gap_impute_train(pftest::vector_dataset(rows, labels), forest(4, 0), ImputeConfig{}, {1});
  for (const auto& it : r.iterations) CHECK(std::isnan(it.score));
  CHECK(r.selected == r.iterations.size() - 1);
  CHECK(r.imputed.instances[3].grid().at(1, 0) == 1.0);
}

TEST_CASE("impute configuration checks") {
  const Dataset d = make_blobs(20, 2, 2, 1.0, 0);
  ImputeConfig c;
  c.iterations = 0;
  CHECK_THROWS_AS(c.validate(d), ConfigError);
  c = {};
  c.metric = ImputeMetric::f1;
  CHECK_THROWS_AS(c.validate(d), ConfigError);
  c = {};
  c.categorical_metric = ImputeMetric::rmse;
  CHECK_THROWS_AS(c.validate(d), ConfigError);
  c = {};
  c.init = InitMethod::knn;
  c.condition_on_label = true;
  CHECK_THROWS_AS(c.validate(d), ConfigError);
  CHECK_THROWS_AS(parse_init_method("zero"), ConfigError);
  CHECK_THROWS_AS(parse_impute_metric("auc"), ConfigError);
}

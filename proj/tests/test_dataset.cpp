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
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "doctest.h"
#include "proxforest/bench.hpp"
#include "proxforest/error.hpp"
#include "support.hpp"

using namespace proxforest;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(PROXFOREST_TEST_TMP) / "dataset";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_CASE("csv loading with ids, missing cells and categorical columns") {
  const auto p = scratch("small.csv");
  write_text(p, "name,species,a,b,kind\nx1,cat,1.5,,0\nx2,dog,2,3,1\nx3,cat,-1e2,4,1\n");
  CsvOptions o;
  o.label_column = "species";
  o.id_column = "name";
  o.categorical_columns = {"kind"};
  const Dataset d = load_csv(p, o);
  CHECK(d.size() == 3);
  CHECK(d.kind == PayloadKind::vector);
  CHECK(d.feature_names == std::vector<std::string>{"a", "b", "kind"});
  CHECK(d.categorical == std::vector<bool>{false, false, true});
  CHECK(d.instances[0].id == "x1");
  CHECK(d.instances[0].grid().is_missing(1, 0));
  CHECK(std::isnan(d.instances[0].grid().at(1, 0)));
  CHECK(d.instances[2].grid().at(0, 0) == -100.0);
  CHECK(d.class_names[static_cast<std::size_t>(d.labels[1])] == "dog");
  CHECK(d.labels[0] == d.labels[2]);
  CHECK(d.missing_count() == 1);

  const auto out = scratch("small_out.csv");
  write_csv(d, out);
  const Dataset back = load_csv(out, o);
  CHECK(back.instances == d.instances);
  CHECK(back.labels == d.labels);
  CHECK(back.feature_names == d.feature_names);
}

TEST_CASE("csv errors name the problem") {
  CsvOptions o;
  o.label_column = "y";
  const auto p = scratch("bad.csv");
  write_text(p, "y,a\ncat,1\ndog,oops\n");
  CHECK_THROWS_AS(load_csv(p, o), FormatError);
  write_text(p, "y,a\ncat,1,2\n");
  CHECK_THROWS_AS(load_csv(p, o), FormatError);
  write_text(p, "z,a\ncat,1\n");
  CHECK_THROWS_AS(load_csv(p, o), FormatError);
  write_text(p, "y,a\ncat,\n");
  CHECK_THROWS_AS(load_csv(p, o), DataError);
  // only an empty cell is missing
  for (const char* cell : {"nan", "NaN", "inf", "NA", "?"}) {
    write_text(p, std::string("y,a,b\ncat,1,") + cell + "\n");
    CHECK_THROWS_AS(load_csv(p, o), FormatError);
  }
  CHECK_THROWS_AS(load_csv(scratch("absent.csv"), o), DataError);
  o.task = Task::regression;
  write_text(p, "y,a\nhigh,1\n");
  CHECK_THROWS_AS(load_csv(p, o), FormatError);
}

TEST_CASE("series jsonl round trip keeps unequal lengths and gaps") {
  const auto p = scratch("series.jsonl");
  write_text(p,
             "{\"id\":\"a\",\"label\":\"x\",\"channels\":[[1,2,3],[4,null,6]]}\n"
             "{\"id\":\"b\",\"label\":\"y\",\"channels\":[[1,2],[3,4]]}\n");
  const Dataset d = load_series_jsonl(p);
  CHECK(d.kind == PayloadKind::series);
  CHECK(d.instances[0].grid().length() == 3);
  CHECK(d.instances[1].grid().length() == 2);
  CHECK(d.instances[0].grid().is_missing(1, 1));
  const auto out = scratch("series_out.jsonl");
  write_series_jsonl(d, out);
  const Dataset back = load_series_jsonl(out);
  CHECK(back.instances == d.instances);
  CHECK(back.labels == d.labels);
  write_text(p, "{\"id\":\"a\",\"label\":\"x\",\"channels\":[[1,2,3],[4]]}\n");
  CHECK_THROWS_AS(load_series_jsonl(p), FormatError);
}

TEST_CASE("graph jsonl round trip") {
  const auto p = scratch("graphs.jsonl");
  write_text(p,
             "{\"id\":\"g0\",\"label\":\"1\",\"nodes\":[0,1,1],\"edges\":[[0,1],[1,2]]}\n"
             "{\"id\":\"g1\",\"label\":\"-1\",\"nodes\":[2],\"edges\":[]}\n");
  const Dataset d = load_dataset(p, {});
  CHECK(d.kind == PayloadKind::graph);
  CHECK(d.instances[0].graph().edge_count() == 2);
  CHECK(d.instances[0].graph().neighbors(1).size() == 2);
  const auto out = scratch("graphs_out.jsonl");
  write_dataset(d, out);
  CHECK(load_graph_jsonl(out).instances == d.instances);
  write_text(p, "{\"id\":\"g0\",\"label\":\"1\",\"nodes\":[0,1],\"edges\":[[0,5]]}\n");
  CHECK_THROWS_AS(load_graph_jsonl(p), FormatError);
}

TEST_CASE("mcar masks the requested fraction and keeps one entry per instance") {
  const Dataset d = sample_vmf_clusters(100, 10.0, 1);
  for (double f : {0.1, 0.5, 0.6}) {
    const Dataset m = inject_mcar(d, f, 3);
    const std::size_t entries = d.size() * 3;
    CHECK(m.missing_count() == static_cast<std::size_t>(std::floor(f * static_cast<double>(entries))));
    for (const auto& inst : m.instances) {
      CHECK(inst.grid().missing_count() < inst.grid().size());
      for (std::size_t j = 0; j < 3; ++j) {
        if (inst.grid().is_missing(j, 0)) CHECK(std::isnan(inst.grid().at(j, 0)));
      }
    }
    CHECK(inject_mcar(d, f, 3).instances == m.instances);
    CHECK(inject_mcar(d, f, 4).instances != m.instances);
  }
  CHECK_THROWS_AS(inject_mcar(d, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(inject_mcar(d, 0.7, 0), DataError);
}

TEST_CASE("train/test split") {
  const Dataset d = sample_vmf_clusters(150, 10.0, 2);
  const Split s = train_test_split(d, 0.5, true, 9);
  CHECK(s.train.size() == 150);
  CHECK(s.test.size() == 150);
  std::set<std::size_t> all(s.train_indices.begin(), s.train_indices.end());
  all.insert(s.test_indices.begin(), s.test_indices.end());
  CHECK(all.size() == d.size());
  std::size_t zeros = 0;
  for (int l : s.test.labels) zeros += l == 0;
  CHECK(zeros == 75);
  const Split u = train_test_split(d, 0.2, false, 9);
  CHECK(u.test.size() == 60);
  CHECK(train_test_split(d, 0.2, false, 9).test_indices == u.test_indices);
  CHECK_THROWS_AS(train_test_split(d, 0.0, false, 0), ConfigError);
}

TEST_CASE("standardize uses the reference statistics") {
  Dataset train = make_blobs(100, 2, 3, 4.0, 0);
  Dataset test = make_blobs(50, 2, 3, 4.0, 1);
  const Dataset reference = train;
  standardize(train, reference);
  standardize(test, reference);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.0, ss = 0.0;
    for (const auto& inst : train.instances) {
      s += inst.grid().at(j, 0);
      ss += inst.grid().at(j, 0) * inst.grid().at(j, 0);
    }
    CHECK(std::abs(s / 100.0) < 1e-12);
    CHECK(ss / 100.0 == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("align_labels remaps to the training classes") {
  Dataset d = pftest::vector_dataset({{1}, {2}}, {0, 1});
  d.class_names = {"b", "a"};
  align_labels(d, {"a", "b", "c"});
  CHECK(d.labels == std::vector<int>{1, 0});
  CHECK(d.class_names == std::vector<std::string>{"a", "b", "c"});
  Dataset e = pftest::vector_dataset({{1}}, {0});
  e.class_names = {"z"};
  CHECK_THROWS_AS(align_labels(e, {"a"}), DataError);
}

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
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "proxforest/bench.hpp"
#include "proxforest/forest.hpp"
#include "proxforest/impute.hpp"
#include "proxforest/meta.hpp"

namespace proxforest {
namespace {

using Runner = std::function<void(const BenchOptions&, BenchReport&)>;

std::string param(const BenchOptions& o, const std::string& key, const std::string& fallback) {
  auto it = o.params.find(key);
  return it == o.params.end() ? fallback : it->second;
}

double param_real(const BenchOptions& o, const std::string& key, double fallback) {
  const std::string s = param(o, key, "");
  if (s.empty()) return fallback;
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError("bench parameter " + key + " is not a number");
  return v;
}

std::size_t param_count(const BenchOptions& o, const std::string& key, std::size_t fallback) {
  const double v = param_real(o, key, static_cast<double>(fallback));
  if (v < 1 || v != std::floor(v)) throw ConfigError("bench parameter " + key + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> param_list(const BenchOptions& o, const std::string& key, const std::string& fallback) {
  std::vector<std::size_t> out;
  const std::string s = param(o, key, fallback);
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(s.data() + pos, s.data() + comma, v);
    if (ec != std::errc() || end != s.data() + comma || v == 0) throw ConfigError("bench parameter " + key + ": bad list");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

std::vector<std::uint64_t> seeds(const BenchOptions& o, std::size_t n) {
  if (!o.seeds.empty()) return o.seeds;
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

std::filesystem::path require(const BenchOptions& o, const std::string& file) {
  const auto p = o.data_dir / file;
  if (!std::filesystem::exists(p)) {
    throw MissingDatasetError(p.string() + " not found; run tools/fetch.sh " + o.data_dir.string() +
                              " (needs network access) to download and convert it");
  }
  return p;
}

ForestConfig forest_config(std::size_t trees, std::size_t r, const std::vector<std::string>& dists, std::uint64_t seed,
                           Task task = Task::classification, Purity purity = Purity::gini) {
  ForestConfig c;
  c.n_trees = trees;
  c.candidates = r;
  for (const auto& d : dists) c.distances.push_back(DistanceSpec::parse(d));
  c.seed = seed;
  c.task = task;
  c.purity = purity;
  return c;
}

std::vector<double> targets(const Dataset& d) {
  std::vector<double> t(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t[i] = d.target(i);
  return t;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stdev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<double> column(const BenchReport& r, std::size_t c) {
  std::vector<double> out;
  for (const auto& row : r.rows) out.push_back(row[c]);
  return out;
}

void standardize_pair(Dataset& train, Dataset& test) {
  const Dataset reference = train;
  standardize(train, reference);
  standardize(test, reference);
}

void run_penguin(const BenchOptions& o, BenchReport& r) {
  CsvOptions csv;
  csv.label_column = "species";
  const Dataset d = load_csv(require(o, "penguins.csv"), csv);
  const std::size_t trees = param_count(o, "trees", 11), rr = param_count(o, "r", 5), k = param_count(o, "k", 5);
  const double test_fraction = param_real(o, "test_fraction", 0.2);
  r.setup = {{"trees", std::to_string(trees)}, {"r", std::to_string(rr)}, {"k", std::to_string(k)},
             {"distance", "euclidean"}, {"test_fraction", param(o, "test_fraction", "0.2")},
             {"standardize", "train statistics"}};
  r.columns = {"seed", "acc_pf", "acc_knn", "knn_minus_pf"};
  for (auto seed : seeds(o, 10)) {
    Split s = train_test_split(d, test_fraction, false, seed);
    standardize_pair(s.train, s.test);
    const Forest f = Forest::fit(s.train, forest_config(trees, rr, {"euclidean"}, seed), {o.threads});
    const double pf = accuracy(targets(s.test), f.predict(s.test, o.threads));
    const auto dist = registry_resolve(DistanceSpec::parse("euclidean"));
    const double knn = knn_baseline(s.train, s.test, k, *dist, false, o.threads).score;
    r.rows.push_back({static_cast<double>(seed), pf, knn, knn - pf});
  }
  const auto diff = column(r, 3);
  r.summary = {{"mean_acc_pf", mean(column(r, 1))},
               {"mean_acc_knn", mean(column(r, 2))},
               {"mean_diff", mean(diff)},
               {"std_diff", stdev(diff)}};
}

void run_sphere(const BenchOptions& o, BenchReport& r) {
  const std::size_t n = param_count(o, "n_per_class", 150);
  const double kappa = param_real(o, "kappa", 10.0);
  const double separation = param_real(o, "separation", 1.0);
  const double missing = param_real(o, "missing", 0.5);
  const std::size_t trees = param_count(o, "trees", 11), rr = param_count(o, "r", 5), k = param_count(o, "k", 5);
  const std::size_t iterations = param_count(o, "iterations", 5);
  r.setup = {{"n_per_class", std::to_string(n)}, {"kappa", param(o, "kappa", "10")},
             {"separation", param(o, "separation", "1.0")}, {"missing", param(o, "missing", "0.5")},
             {"trees", std::to_string(trees)}, {"r", std::to_string(rr)}, {"k", std::to_string(k)},
             {"iterations", std::to_string(iterations)}, {"init", "mean"}, {"metric", "r2"}};
  r.columns = {"seed", "acc_pf", "acc_knn", "pf_ge_knn", "hull_violations", "selected_iteration"};
  const auto dist = registry_resolve(DistanceSpec::parse("euclidean"));
  for (auto seed : seeds(o, 5)) {
    const Dataset d = sample_vmf_clusters(n, kappa, seed, separation);
    const Split s = train_test_split(d, 0.5, true, seed);
    const Dataset train = inject_mcar(s.train, missing, derive_seed(seed, 1));
    const Dataset test = inject_mcar(s.test, missing, derive_seed(seed, 2));

    const double knn = knn_baseline(train, test, k, *dist, true, o.threads).score;

    const ForestConfig fcfg = forest_config(trees, rr, {"euclidean"}, seed);
    ImputeConfig icfg;
    icfg.iterations = iterations;
    icfg.threads = o.threads;
    const ImputationReport rep = gap_impute_train(train, fcfg, icfg, {o.threads});
    const Forest f = Forest::fit(rep.imputed, fcfg, {o.threads});
    const TestImputation ti = gap_impute_test(rep.imputed, test, f, icfg);
    const double pf = accuracy(targets(test), f.predict(ti.imputed, o.threads));
    std::size_t hull = ti.hull_violations;
    for (const auto& it : rep.iterations) hull += it.hull_violations;
    r.rows.push_back({static_cast<double>(seed), pf, knn, pf >= knn ? 1.0 : 0.0, static_cast<double>(hull),
                      static_cast<double>(rep.selected)});
  }
  const auto wins = column(r, 3);
  r.summary = {{"mean_acc_pf", mean(column(r, 1))},
               {"mean_acc_knn", mean(column(r, 2))},
               {"pf_ge_knn_seeds", std::accumulate(wins.begin(), wins.end(), 0.0)},
               {"seeds", static_cast<double>(r.rows.size())}};
}

void run_proteins(const BenchOptions& o, BenchReport& r) {
  const Dataset d = load_graph_jsonl(require(o, "proteins.jsonl"));
  const std::size_t trees = param_count(o, "trees", 11), rr = param_count(o, "r", 5), k = param_count(o, "k", 5);
  const std::string wl = "wl:h=" + param(o, "h", "3");
  const auto split_seed = static_cast<std::uint64_t>(param_real(o, "split_seed", 0));
  r.setup = {{"trees", std::to_string(trees)}, {"r", std::to_string(rr)}, {"k", std::to_string(k)},
             {"distance", wl}, {"split", "80/10/10 stratified"}, {"split_seed", std::to_string(split_seed)}};
  const Split outer = train_test_split(d, 0.2, true, split_seed);
  const Split inner = train_test_split(outer.test, 0.5, true, split_seed);
  const Dataset& val = inner.train;
  const Dataset& test = inner.test;
  const auto dist = registry_resolve(DistanceSpec::parse(wl));
  const double knn_val = knn_baseline(outer.train, val, k, *dist, false, o.threads).score;
  const double knn_test = knn_baseline(outer.train, test, k, *dist, false, o.threads).score;
  r.columns = {"seed", "val_pf", "test_pf", "val_knn", "test_knn"};
  for (auto seed : seeds(o, 1)) {
    const Forest f = Forest::fit(outer.train, forest_config(trees, rr, {wl}, seed), {o.threads});
    r.rows.push_back({static_cast<double>(seed), accuracy(targets(val), f.predict(val, o.threads)),
                      accuracy(targets(test), f.predict(test, o.threads)), knn_val, knn_test});
  }
  r.summary = {{"mean_test_pf", mean(column(r, 2))}, {"test_knn", knn_test}, {"val_knn", knn_val},
               {"mean_val_pf", mean(column(r, 1))}};
}

void run_vowels(const BenchOptions& o, BenchReport& r) {
  const Dataset train = load_series_jsonl(require(o, "vowels_train.jsonl"));
  Dataset test = load_series_jsonl(require(o, "vowels_test.jsonl"));
  align_labels(test, train.class_names);
  const std::size_t trees = param_count(o, "trees", 100), rr = param_count(o, "r", 5), k = param_count(o, "k", 1);
  r.setup = {{"trees", std::to_string(trees)}, {"r", std::to_string(rr)}, {"k", std::to_string(k)},
             {"pf_distances", "dtw_d,dtw_i"}, {"knn_distance", "dtw_d"}, {"split", "provided"}};
  const auto dist = registry_resolve(DistanceSpec::parse("dtw_d"));
  const double knn = knn_baseline(train, test, k, *dist, false, o.threads).score;
  r.columns = {"seed", "acc_pf", "acc_knn"};
  for (auto seed : seeds(o, 3)) {
    const Forest f = Forest::fit(train, forest_config(trees, rr, {"dtw_d", "dtw_i"}, seed), {o.threads});
    r.rows.push_back({static_cast<double>(seed), accuracy(targets(test), f.predict(test, o.threads)), knn});
  }
  const auto pf = column(r, 1);
  r.summary = {{"mean_acc_pf", mean(pf)},
               {"min_acc_pf", *std::min_element(pf.begin(), pf.end())},
               {"max_acc_pf", *std::max_element(pf.begin(), pf.end())},
               {"acc_knn", knn}};
}

void run_flood(const BenchOptions& o, BenchReport& r) {
  const Dataset train = load_series_jsonl(require(o, "flood_train.jsonl"), Task::regression);
  const Dataset test = load_series_jsonl(require(o, "flood_test.jsonl"), Task::regression);
  const std::size_t trees = param_count(o, "trees", 100), rr = param_count(o, "r", 5), k = param_count(o, "k", 5);
  r.setup = {{"trees", std::to_string(trees)}, {"r", std::to_string(rr)}, {"k", std::to_string(k)},
             {"distance", "dtw_d"}, {"purity", "mad"}};
  const auto dist = registry_resolve(DistanceSpec::parse("dtw_d"));
  const double knn = knn_baseline(train, test, k, *dist, false, o.threads).score;
  r.columns = {"seed", "r2_pf", "r2_knn"};
  for (auto seed : seeds(o, 1)) {
    const Forest f =
        Forest::fit(train, forest_config(trees, rr, {"dtw_d"}, seed, Task::regression, Purity::mad), {o.threads});
    r.rows.push_back({static_cast<double>(seed), r2_score(targets(test), f.predict(test, o.threads)), knn});
  }
  r.summary = {{"mean_r2_pf", mean(column(r, 1))}, {"r2_knn", knn}};
}

void run_arrowhead_meta(const BenchOptions& o, BenchReport& r) {
  const Dataset train = load_series_jsonl(require(o, "arrowhead_train.jsonl"));
  Dataset test = load_series_jsonl(require(o, "arrowhead_test.jsonl"));
  align_labels(test, train.class_names);
  const std::size_t trees = param_count(o, "trees", 11), rr = param_count(o, "r", 5);
  const double missing = param_real(o, "missing", 0.1);
  r.setup = {{"trees", std::to_string(trees)}, {"r", std::to_string(rr)}, {"missing", param(o, "missing", "0.1")},
             {"init", "linear"}, {"distance", "meta_class"}, {"pretrained", "nearest centroid"}};
  NearestCentroid model;
  model.fit(train);
  const auto truth = targets(test);
  const double complete = accuracy(truth, model.predict(test));
  r.columns = {"seed", "acc_init", "acc_gap", "gap_ge_init", "fallbacks"};
  for (auto seed : seeds(o, 5)) {
    const Dataset test_m = inject_mcar(test, missing, seed);
    ImputeConfig icfg;
    icfg.init = InitMethod::linear;
    icfg.threads = o.threads;
    const Dataset init = initialize(test_m, icfg, &train);
    auto table = std::make_shared<PredictionTable>();
    for (const auto& x : train.instances) table->add_label(x.id, train.class_names[static_cast<std::size_t>(model.predict(x))]);
    for (const auto& x : init.instances) table->add_label(x.id, train.class_names[static_cast<std::size_t>(model.predict(x))]);
    ForestConfig fcfg = forest_config(trees, rr, {}, seed);
    fcfg = attach_meta_distance(fcfg, table, MetaForm::label, train);
    const Forest f = Forest::fit(train, fcfg, {o.threads});
    const TestImputation ti = gap_impute_test(train, test_m, f, icfg);
    const double acc_init = accuracy(truth, model.predict(ti.initialized));
    const double acc_gap = accuracy(truth, model.predict(ti.imputed));
    r.rows.push_back({static_cast<double>(seed), acc_init, acc_gap, acc_gap >= acc_init ? 1.0 : 0.0,
                      static_cast<double>(ti.fallbacks)});
  }
  const auto wins = column(r, 3);
  r.summary = {{"acc_complete", complete},
               {"mean_acc_init", mean(column(r, 1))},
               {"mean_acc_gap", mean(column(r, 2))},
               {"gap_ge_init_seeds", std::accumulate(wins.begin(), wins.end(), 0.0)},
               {"seeds", static_cast<double>(r.rows.size())}};
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = std::numeric_limits<double>::quiet_NaN();
};

// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  const double xm = mean(x), ym = mean(y);
  double sxy = 0.0, sxx = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - xm) * (y[i] - ym);
    sxx += (x[i] - xm) * (x[i] - xm);
    tot += (y[i] - ym) * (y[i] - ym);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  double res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    res += e * e;
  }
  if (tot > 0.0) f.r2 = 1.0 - res / tot;
  return f;
}

void run_scaling(const BenchOptions& o, BenchReport& r) {
  const auto sizes = param_list(o, "sizes", "1000,2000,4000,8000");
  const std::size_t queries = param_count(o, "queries", 500);
  const std::size_t classes = param_count(o, "classes", 2), dims = param_count(o, "dims", 2);
  const double spread = param_real(o, "spread", 8.0);
  const std::size_t trees = param_count(o, "trees", 11), rr = param_count(o, "r", 5);
  const std::uint64_t seed = seeds(o, 1).front();
  r.setup = {{"sizes", param(o, "sizes", "1000,2000,4000,8000")}, {"queries", std::to_string(queries)},
             {"classes", std::to_string(classes)}, {"dims", std::to_string(dims)},
             {"spread", param(o, "spread", "8")}, {"trees", std::to_string(trees)}, {"r", std::to_string(rr)},
             {"seed", std::to_string(seed)}};
  const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
  const Dataset all = make_blobs(largest + queries, classes, dims, spread, seed);
  std::vector<std::size_t> qidx(queries);
  std::iota(qidx.begin(), qidx.end(), largest);
  const Dataset q = all.subset(qidx);
  r.columns = {"n", "pf_evals_per_query", "knn_evals_per_query", "mean_rounds_per_tree"};
  for (std::size_t n : sizes) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const Forest f = Forest::fit(all.subset(idx), forest_config(trees, rr, {"euclidean"}, seed), {o.threads});
    RouteStats stats;
    for (const auto& x : q.instances) f.predict(x, &stats);
    r.rows.push_back({static_cast<double>(n), static_cast<double>(stats.distance_evaluations) / queries,
                      static_cast<double>(n), static_cast<double>(stats.rounds) / (queries * trees)});
  }
  std::vector<double> logn, n, y = column(r, 1);
  for (const auto& row : r.rows) {
    logn.push_back(std::log2(row[0]));
    n.push_back(row[0]);
  }
  const LineFit log_fit = fit_line(logn, y), linear_fit = fit_line(n, y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += logn[i] * y[i];
    sxx += logn[i] * logn[i];
  }
  const auto& last = *std::max_element(r.rows.begin(), r.rows.end(), [](const auto& a, const auto& b) { return a[0] < b[0]; });
  r.summary = {{"c_log2", log_fit.slope},
               {"intercept", log_fit.intercept},
               {"r2_log_fit", log_fit.r2},
               {"r2_linear_fit", linear_fit.r2},
               {"c_log2_through_origin", sxy / sxx},
               {"largest_n", last[0]},
               {"pf_evals_at_largest", last[1]},
               {"pf_over_knn_at_largest", last[1] / last[0]}};
}

void run_blobs(const BenchOptions& o, BenchReport& r) {
  struct Table {
    std::string name;
    std::function<Dataset()> load;
  };
  auto table = [&](const std::string& file) {
    return [&o, file] {
      CsvOptions csv;
      csv.label_column = "target";
      return load_csv(require(o, file), csv);
    };
  };
  const std::vector<Table> tables{{"blobs", [] { return make_blobs(600, 3, 4, 3.0, 0); }},
                                  {"iris", table("iris.csv")},
                                  {"wine", table("wine.csv")},
                                  {"breast_cancer", table("breast_cancer.csv")},
                                  {"digits", table("digits.csv")}};
  const auto run_seeds = seeds(o, 5);
  r.setup = {{"models", "PF-11 (r=5), PF-100 (r=5), KNN k=5"}, {"distance", "euclidean"},
             {"split", "80/20 stratified, standardized"}, {"seeds", std::to_string(run_seeds.size())}};
  r.columns = {"dataset", "acc_pf11", "acc_pf100", "acc_knn", "rank_pf11", "rank_pf100", "rank_knn"};
  const auto dist = registry_resolve(DistanceSpec::parse("euclidean"));
  std::vector<double> rank_sum(3, 0.0);
  for (std::size_t t = 0; t < tables.size(); ++t) {
    Dataset d;
    try {
      d = tables[t].load();
    } catch (const MissingDatasetError& e) {
      r.notes.push_back("skipped " + tables[t].name + ": " + e.what());
      continue;
    }
    std::vector<double> acc(3, 0.0);
    for (auto seed : run_seeds) {
      Split s = train_test_split(d, 0.2, true, seed);
      standardize_pair(s.train, s.test);
      const auto truth = targets(s.test);
      for (std::size_t m = 0; m < 2; ++m) {
        const Forest f = Forest::fit(s.train, forest_config(m == 0 ? 11 : 100, 5, {"euclidean"}, seed), {o.threads});
        acc[m] += accuracy(truth, f.predict(s.test, o.threads));
      }
      acc[2] += knn_baseline(s.train, s.test, 5, *dist, false, o.threads).score;
    }
    for (double& a : acc) a /= static_cast<double>(run_seeds.size());
    std::vector<double> rank(3);
    for (std::size_t a = 0; a < 3; ++a) {
      double better = 0.0, equal = 0.0;
      for (std::size_t b = 0; b < 3; ++b) {
        if (acc[b] > acc[a]) better += 1.0;
        if (b != a && acc[b] == acc[a]) equal += 1.0;
      }
      rank[a] = 1.0 + better + equal / 2.0;
      rank_sum[a] += rank[a];
    }
    r.notes.push_back("dataset " + std::to_string(t) + " = " + tables[t].name);
    r.rows.push_back({static_cast<double>(t), acc[0], acc[1], acc[2], rank[0], rank[1], rank[2]});
  }
  const double n = static_cast<double>(std::max<std::size_t>(r.rows.size(), 1));
  r.summary = {{"avg_rank_pf11", rank_sum[0] / n}, {"avg_rank_pf100", rank_sum[1] / n},
               {"avg_rank_knn", rank_sum[2] / n}, {"datasets", static_cast<double>(r.rows.size())}};
}

const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> all{
      {"penguin", run_penguin},   {"sphere", run_sphere},   {"proteins", run_proteins},
      {"vowels", run_vowels},     {"flood", run_flood},     {"arrowhead_meta", run_arrowhead_meta},
      {"scaling", run_scaling},   {"blobs", run_blobs}};
  return all;
}

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : runners()) out.push_back(name);
  return out;
}

BenchReport run_experiment(const std::string& name, const BenchOptions& options) {
  for (const auto& [n, run] : runners()) {
    if (n != name) continue;
    BenchReport r;
    r.experiment = name;
    run(options, r);
    return r;
  }
  std::string known;
  for (const auto& n : experiment_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown benchmark '" + name + "' (known: " + known + ")");
}

}  // namespace proxforest

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
// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
//   proxforest_acceptance [--data-dir DIR] [--tolerate NAME]... [NAME]...
//
// With no names every criterion runs. Exit status: 0 when nothing failed
// (tolerated failures still print FAIL), 1 on a failure, 77 when every
// selected criterion was skipped for lack of data.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "proxforest/bench.hpp"
#include "proxforest/dataset.hpp"
#include "proxforest/distance.hpp"
#include "proxforest/error.hpp"
#include "proxforest/forest.hpp"
#include "proxforest/gap.hpp"
#include "proxforest/impute.hpp"
#include "proxforest/meta.hpp"
#include "proxforest/random.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace proxforest;

namespace {

enum class Outcome { pass, fail, skip };

struct Result {
  Outcome outcome = Outcome::pass;
  std::string detail;
};

struct Context {
  fs::path data_dir;
  std::size_t threads = 0;
};

Result verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

ForestConfig forest(std::size_t trees, std::uint64_t seed, const std::string& dist = "euclidean") {
  ForestConfig c;
  c.n_trees = trees;
  c.distances = {DistanceSpec::parse(dist)};
  c.seed = seed;
  return c;
}

BenchOptions bench_options(const Context& ctx) {
  BenchOptions o;
  o.data_dir = ctx.data_dir;
  o.threads = ctx.threads;
  return o;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

Dataset penguins(const Context& ctx) {
  const fs::path p = ctx.data_dir / "penguins.csv";
  if (!fs::exists(p)) throw MissingDatasetError(p.string() + " not found; run tools/fetch.sh");
  CsvOptions o;
  o.label_column = "species";
  return load_csv(p, o);
}

// ---------------------------------------------------------------------------

Result reconstruction(const Context& ctx) {
  const Dataset peng = penguins(ctx);
  std::size_t covered = 0, mismatched = 0, forests = 0;
  for (std::uint64_t seed : {0, 1, 2}) {
    const std::vector<Dataset> sets{peng, make_blobs(300, 3, 2, 3.0, seed), sample_vmf_clusters(150, 10.0, seed)};
    for (const Dataset& d : sets) {
      for (std::size_t trees : {11, 100}) {
        const Forest f = Forest::fit(d, forest(trees, seed), {ctx.threads});
        const GapMatrix gap = compute_oob_proximities(f, ctx.threads);
        const auto recon = proximity_weighted_prediction(gap, d);
        const auto oob = f.predict_oob();
        for (std::size_t a = 0; a < gap.rows.size(); ++a) {
          const std::size_t i = gap.rows[a].row;
          ++covered;
          mismatched += !oob.covered[i] || recon[a] != oob.values[i];
        }
        ++forests;
      }
    }
  }
  return verdict(mismatched == 0 && covered > 0, std::to_string(forests) + " forests, " + std::to_string(covered) +
                                                     " covered rows, " + std::to_string(mismatched) + " mismatches");
}

Result row_stochastic(const Context& ctx) {
  Rng rng = make_rng(11);
  std::vector<Grid> series;
  std::vector<int> series_labels;
  std::vector<Graph> graphs;
  for (int i = 0; i < 60; ++i) {
    series.push_back(pftest::random_series(rng, 2, 6 + i % 5));
    series_labels.push_back(i % 3);
    graphs.push_back(pftest::random_graph(rng, 3 + i % 8, 0.35, 3));
  }
  Dataset graph_set;
  graph_set.kind = PayloadKind::graph;
  graph_set.class_names = {"0", "1"};
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    graph_set.instances.push_back({"g" + std::to_string(i), graphs[i]});
    graph_set.labels.push_back(static_cast<int>(i % 2));
  }
  std::vector<double> y;
  const Dataset blobs = make_blobs(200, 3, 2, 2.5, 1);
  for (std::size_t i = 0; i < blobs.size(); ++i) y.push_back(blobs.instances[i].grid().at(0, 0));
  Dataset reg = blobs;
  reg.task = Task::regression;
  reg.labels.clear();
  reg.class_names.clear();
  reg.responses = y;

  struct Case {
    Dataset data;
    std::string dist;
  };
  std::vector<Case> cases{{blobs, "euclidean"},
                          {sample_vmf_clusters(80, 10.0, 2), "cosine"},
                          {pftest::series_dataset(series, series_labels), "dtw_d"},
                          {pftest::series_dataset(series, series_labels), "dtw_i:w=2"},
                          {graph_set, "wl:h=2"},
                          {reg, "euclidean"}};
  try {
    cases.push_back({penguins(ctx), "euclidean"});
  } catch (const MissingDatasetError&) {
  }
  double worst = 0.0;
  std::size_t rows = 0;
  for (const auto& c : cases) {
    for (std::size_t trees : {1, 11, 100}) {
      ForestConfig cfg = forest(trees, trees, c.dist);
      cfg.task = c.data.task;
      cfg.purity = c.data.task == Task::classification ? Purity::gini : Purity::variance;
      const Forest f = Forest::fit(c.data, cfg, {ctx.threads});
      for (const GapMatrix& g : {compute_oob_proximities(f, ctx.threads), compute_test_proximities(f, c.data, ctx.threads)}) {
        for (const auto& r : g.rows) {
          worst = std::max(worst, std::abs(r.sum() - 1.0));
          ++rows;
        }
      }
    }
  }
  return verdict(worst <= 1e-9, std::to_string(rows) + " rows, max |sum - 1| = " + sci(worst));
}

// p(i, j) computed literally from routed leaves and bootstrap counts.
std::vector<double> oracle_row(const Forest& f, const Instance& x, std::optional<std::size_t> oob_index) {
  const std::size_t n = f.training().size();
  std::vector<double> p(n, 0.0);
  std::size_t s = 0;
  for (std::size_t t = 0; t < f.trees().size(); ++t) {
    const Tree& tree = f.trees()[t];
    if (oob_index && tree.multiplicity[*oob_index] > 0) continue;
    ++s;
    const std::uint32_t leaf = f.route(t, x);
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (f.route(t, f.training().instances[j]) == leaf) m += tree.multiplicity[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (f.route(t, f.training().instances[j]) == leaf) p[j] += tree.multiplicity[j] / m;
    }
  }
  if (s == 0) return {};
  for (double& v : p) v /= static_cast<double>(s);
  return p;
}

Result oracle(const Context&) {
  Rng rng = make_rng(31);
  std::uniform_int_distribution<std::size_t> size(2, 8), trees(1, 3), classes(2, 3);
  std::uniform_int_distribution<int> coarse(0, 3);
  std::size_t forests = 0, compared = 0, bad = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 80; ++rep) {
    const std::size_t n = size(rng), k = classes(rng);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back({double(coarse(rng)), double(coarse(rng))});
      labels.push_back(static_cast<int>(i % k));
    }
    const Dataset d = pftest::vector_dataset(rows, labels, k);
    const Forest f = Forest::fit(d, forest(trees(rng), rep), {1});
    ++forests;
    auto compare = [&](const GapRow* row, const std::vector<double>& expect) {
      if ((row == nullptr) != expect.empty()) {
        ++bad;
        return;
      }
      if (!row) return;
      std::vector<double> got(n, 0.0);
      for (std::size_t c = 0; c < row->columns.size(); ++c) got[row->columns[c]] = row->values[c];
      for (std::size_t j = 0; j < n; ++j) {
        worst = std::max(worst, std::abs(got[j] - expect[j]));
        ++compared;
      }
    };
    const GapMatrix oob = compute_oob_proximities(f, 1);
    for (std::size_t i = 0; i < n; ++i) compare(oob.find(i), oracle_row(f, d.instances[i], i));
    const Dataset probe = pftest::vector_dataset({{0.5, 2.5}, {3.0, 0.0}, {1.0, 1.0}}, {0, 0, 0}, k);
    const GapMatrix test = compute_test_proximities(f, probe, 1);
    for (std::size_t i = 0; i < probe.size(); ++i) compare(test.find(i), oracle_row(f, probe.instances[i], std::nullopt));
  }
  return verdict(forests >= 50 && bad == 0 && worst <= 1e-12,
                 std::to_string(forests) + " forests, " + std::to_string(compared) + " entries, max error " +
                     sci(worst) + ", " + std::to_string(bad) + " coverage mismatches");
}

Result penguin_bench(const Context& ctx) {
  const BenchReport r = run_experiment("penguin", bench_options(ctx));
  const double diff = r.summary.at("mean_diff");
  return verdict(std::abs(diff) <= 0.04, "mean(acc_knn - acc_pf) = " + fmt(diff) + " +/- " +
                                             fmt(r.summary.at("std_diff")) + " over " +
                                             std::to_string(r.rows.size()) + " seeds");
}

Result sphere_bench(const Context& ctx) {
  const BenchReport r = run_experiment("sphere", bench_options(ctx));
  const double wins = r.summary.at("pf_ge_knn_seeds");
  return verdict(wins >= 4, "PF >= KNN in " + fmt(wins, 0) + "/" + fmt(r.summary.at("seeds"), 0) +
                                " seeds (mean PF " + fmt(r.summary.at("mean_acc_pf")) + ", mean KNN " +
                                fmt(r.summary.at("mean_acc_knn")) + ")");
}

Result proteins_bench(const Context& ctx) {
  const BenchReport r = run_experiment("proteins", bench_options(ctx));
  const double pf = r.summary.at("mean_test_pf"), knn = r.summary.at("test_knn");
  return verdict(pf >= knn + 0.05 && pf >= 0.70, "PF " + fmt(pf) + ", KNN " + fmt(knn));
}

Result vowels_bench(const Context& ctx) {
  const BenchReport r = run_experiment("vowels", bench_options(ctx));
  const double lo = r.summary.at("min_acc_pf"), hi = r.summary.at("max_acc_pf"), knn = r.summary.at("acc_knn");
  return verdict(lo >= 0.94 && hi <= 0.99 && std::abs(knn - 0.9486) <= 0.02,
                 "PF in [" + fmt(lo) + ", " + fmt(hi) + "], KNN " + fmt(knn));
}

Result flood_bench(const Context& ctx) {
  const BenchReport r = run_experiment("flood", bench_options(ctx));
  const double pf = r.summary.at("mean_r2_pf"), knn = r.summary.at("r2_knn");
  return verdict(pf >= knn + 0.05 && pf >= 0.85 && std::abs(knn - 0.7949) <= 0.03,
                 "PF R2 " + fmt(pf) + ", KNN R2 " + fmt(knn));
}

Result meta_bench(const Context& ctx) {
  const BenchReport r = run_experiment("arrowhead_meta", bench_options(ctx));
  const double wins = r.summary.at("gap_ge_init_seeds");
  return verdict(wins >= 4, "GAP >= init in " + fmt(wins, 0) + "/" + fmt(r.summary.at("seeds"), 0) +
                                " seeds (init " + fmt(r.summary.at("mean_acc_init")) + ", GAP " +
                                fmt(r.summary.at("mean_acc_gap")) + ")");
}

Result scaling_bench(const Context& ctx) {
  const BenchReport r = run_experiment("scaling", bench_options(ctx));
  const double r2 = r.summary.at("r2_log_fit"), ratio = r.summary.at("pf_over_knn_at_largest");
  return verdict(r2 >= 0.9 && ratio <= 0.05, "evals = " + fmt(r.summary.at("intercept"), 1) + " + " +
                                                 fmt(r.summary.at("c_log2"), 2) + " log2 N, R2 " + fmt(r2) +
                                                 "; PF/KNN at N=" + fmt(r.summary.at("largest_n"), 0) + " is " +
                                                 fmt(ratio));
}

// ---------------------------------------------------------------------------

struct HullTally {
  std::size_t runs = 0;
  std::size_t entries = 0;
  std::size_t violations = 0;
  std::size_t reported = 0;
  std::size_t bad_selection = 0;

  // Imputed continuous entries must lie in the observed range of their column.
  void check(const Dataset& original, const Dataset& imputed, const Dataset& reference) {
    for (std::size_t j = 0; j < original.feature_count(); ++j) {
      if (!original.categorical.empty() && original.categorical[j]) continue;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& inst : reference.instances) {
        const Grid& g = inst.grid();
        for (std::size_t t = 0; t < g.length(); ++t) {
          if (!g.is_missing(j, t)) {
            lo = std::min(lo, g.at(j, t));
            hi = std::max(hi, g.at(j, t));
          }
        }
      }
      const double tol = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
      for (std::size_t n = 0; n < original.size(); ++n) {
        const Grid& g = original.instances[n].grid();
        for (std::size_t t = 0; t < g.length(); ++t) {
          if (!g.is_missing(j, t)) continue;
          const double v = imputed.instances[n].grid().at(j, t);
          ++entries;
          violations += !(v >= lo - tol && v <= hi + tol);
        }
      }
    }
  }

  void train_run(const Dataset& data, const ImputationReport& r) {
    ++runs;
    for (const auto& it : r.iterations) reported += it.hull_violations;
    check(data, r.imputed, data);
    const bool lower = lower_is_better(r.selection_metric);
    for (const auto& it : r.iterations) {
      if (std::isnan(it.score)) continue;
      const double sel = r.iterations[r.selected].score;
      bad_selection += std::isnan(sel) || (lower ? sel > it.score : sel < it.score);
    }
  }

  void test_run(const Dataset& test, const Dataset& donors, const TestImputation& ti) {
    ++runs;
    reported += ti.hull_violations;
    // Donor values come from the imputed training set; the hull is the
    // training column range, which initialization also respects.
    check(test, ti.imputed, donors);
  }
};

Result hull(const Context& ctx) {
  HullTally tally;
  std::vector<std::string> covered{"sphere", "blobs", "series"};
  auto run = [&](const Dataset& train, const Dataset& test, const ForestConfig& fc, const ImputeConfig& ic) {
    const ImputationReport rep = gap_impute_train(train, fc, ic, {ctx.threads});
    tally.train_run(train, rep);
    const Forest f = Forest::fit(rep.imputed, fc, {ctx.threads});
    tally.test_run(test, rep.imputed, gap_impute_test(rep.imputed, test, f, ic));
  };
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Split s = train_test_split(sample_vmf_clusters(150, 10.0, seed), 0.5, true, seed);
    ImputeConfig ic;
    ic.iterations = 5;
    run(inject_mcar(s.train, 0.5, derive_seed(seed, 1)), inject_mcar(s.test, 0.5, derive_seed(seed, 2)),
        forest(11, seed), ic);
  }
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Split s = train_test_split(make_blobs(200, 3, 4, 2.0, seed), 0.3, true, seed);
    for (ImputeMetric m : {ImputeMetric::r2, ImputeMetric::rmse, ImputeMetric::mae}) {
      for (InitMethod init : {InitMethod::mean, InitMethod::median, InitMethod::knn}) {
        ImputeConfig ic;
        ic.metric = m;
        ic.init = init;
        ic.iterations = 4;
        run(inject_mcar(s.train, 0.3, seed + 7), inject_mcar(s.test, 0.3, seed + 8), forest(11, seed), ic);
      }
    }
  }
  {
    Rng rng = make_rng(41);
    std::vector<Grid> grids;
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) {
      Grid g = pftest::random_series(rng, 2, 10);
      for (std::size_t t = 0; t < 10; ++t) g.at(0, t) += (i % 2) * 2.0;
      grids.push_back(g);
      labels.push_back(i % 2);
    }
    const Split s = train_test_split(pftest::series_dataset(grids, labels), 0.25, true, 0);
    ImputeConfig ic;
    ic.init = InitMethod::linear;
    ic.iterations = 4;
    run(inject_mcar(s.train, 0.2, 1), inject_mcar(s.test, 0.2, 2), forest(11, 0, "dtw_d"), ic);
  }
  try {
    const Dataset peng = penguins(ctx);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Split s = train_test_split(peng, 0.2, true, seed);
      ImputeConfig ic;
      ic.iterations = 4;
      run(inject_mcar(s.train, 0.2, seed), inject_mcar(s.test, 0.2, seed + 100), forest(11, seed), ic);
    }
    covered.push_back("penguins");
  } catch (const MissingDatasetError&) {
  }
  const fs::path arrow_train = ctx.data_dir / "arrowhead_train.jsonl", arrow_test = ctx.data_dir / "arrowhead_test.jsonl";
  if (fs::exists(arrow_train) && fs::exists(arrow_test)) {
    const Dataset train = load_series_jsonl(arrow_train);
    Dataset test = load_series_jsonl(arrow_test);
    align_labels(test, train.class_names);
    NearestCentroid model;
    model.fit(train);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Dataset test_m = inject_mcar(test, 0.1, seed);
      ImputeConfig ic;
      ic.init = InitMethod::linear;
      const Dataset init = initialize(test_m, ic, &train);
      auto table = std::make_shared<PredictionTable>();
      for (const auto& x : train.instances) table->add_label(x.id, train.class_names[model.predict(x)]);
      for (const auto& x : init.instances) table->add_label(x.id, train.class_names[model.predict(x)]);
      ForestConfig fc;
      fc.n_trees = 11;
      fc.seed = seed;
      fc = attach_meta_distance(fc, table, MetaForm::label, train);
      const Forest f = Forest::fit(train, fc, {ctx.threads});
      tally.test_run(test_m, train, gap_impute_test(train, test_m, f, ic));
    }
    covered.push_back("arrowhead");
  }
  std::string sets;
  for (const auto& c : covered) sets += (sets.empty() ? "" : ",") + c;
  return verdict(tally.violations == 0 && tally.reported == 0 && tally.bad_selection == 0,
                 std::to_string(tally.runs) + " runs [" + sets + "], " + std::to_string(tally.entries) +
                     " imputed entries, " + std::to_string(tally.violations + tally.reported) +
                     " hull violations, " + std::to_string(tally.bad_selection) + " non-extremal selections");
}

// ---------------------------------------------------------------------------

double dtw_oracle(const Grid& x, const Grid& y, DtwWindow w) {
  const std::size_t n = x.length(), m = y.length();
  const std::size_t gap = n > m ? n - m : m - n;
  const std::size_t band = w ? std::max(*w, gap) : std::max(n, m);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    if ((i > j ? i - j : j - i) > band) return;
    for (std::size_t ch = 0; ch < x.channels(); ++ch) acc += (x.at(ch, i) - y.at(ch, j)) * (x.at(ch, i) - y.at(ch, j));
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

Result distance_contract(const Context&) {
  constexpr int kCases = 10000;
  Rng rng = make_rng(51);
  std::uniform_int_distribution<std::size_t> len(1, 12), dim(1, 9), nodes(1, 10);
  std::bernoulli_distribution hole(0.15);
  std::vector<std::string> failures;
  std::size_t checked = 0;

  auto contract = [](const DistanceMeasure& d, const Instance& x, const Instance& y) {
    const double xy = d(x, y);
    return xy == d(y, x) && xy >= 0.0 && d(x, x) == 0.0 && d(y, y) == 0.0;
  };
  auto tally = [&](const std::string& name, int bad) {
    ++checked;
    if (bad) failures.push_back(name + ":" + std::to_string(bad));
  };

  {
    const auto d = registry_resolve(DistanceSpec::parse("euclidean"));
    int bad = 0;
    for (int rep = 0; rep < kCases; ++rep) {
      const std::size_t n = dim(rng);
      auto a = pftest::random_vector(rng, n), b = pftest::random_vector(rng, n);
      for (auto* v : {&a, &b}) {
        for (std::size_t i = 1; i < n; ++i) {
          if (hole(rng)) (*v)[i] = std::numeric_limits<double>::quiet_NaN();
        }
      }
      bad += !contract(*d, {"a", Grid(n, 1, a)}, {"b", Grid(n, 1, b)});
    }
    tally("euclidean", bad);
  }
  {
    const auto d = registry_resolve(DistanceSpec::parse("cosine"));
    int bad = 0;
    for (int rep = 0; rep < kCases; ++rep) {
      const std::size_t n = dim(rng);
      const Instance a{"a", Grid(n, 1, pftest::random_vector(rng, n))}, b{"b", Grid(n, 1, pftest::random_vector(rng, n))};
      bad += !contract(*d, a, b) || (*d)(a, b) > 2.0;
    }
    tally("cosine", bad);
  }
  for (const char* spec : {"dtw_d", "dtw_i", "dtw_d:w=2", "dtw_i:w=1"}) {
    const auto d = registry_resolve(DistanceSpec::parse(spec));
    int bad = 0;
    for (int rep = 0; rep < kCases; ++rep) {
      const std::size_t p = 1 + rep % 3;
      bad += !contract(*d, {"a", pftest::random_series(rng, p, len(rng))}, {"b", pftest::random_series(rng, p, len(rng))});
    }
    tally(spec, bad);
  }
  {
    const auto d = registry_resolve(DistanceSpec::parse("wl:h=2"));
    int bad = 0;
    for (int rep = 0; rep < kCases; ++rep) {
      const Instance a{"a", pftest::random_graph(rng, nodes(rng), 0.3, 3)};
      const Instance b{"b", pftest::random_graph(rng, nodes(rng), 0.3, 3)};
      bad += !contract(*d, a, b) || (*d)(a, b) > 1.0;
    }
    tally("wl", bad);
  }
  {
    auto labels = std::make_shared<PredictionTable>();
    auto probs = std::make_shared<PredictionTable>();
    probs->set_columns({"a", "b", "c"});
    std::uniform_int_distribution<int> cls(0, 2), id(0, 199);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      labels->add_label("i" + std::to_string(i), "c" + std::to_string(cls(rng)));
      std::vector<double> row{u(rng), u(rng), u(rng)};
      const double s = row[0] + row[1] + row[2];
      for (double& x : row) x /= s;
      probs->add_probabilities("i" + std::to_string(i), row);
    }
    const auto dl = registry_resolve(DistanceSpec{"meta_class", {}, labels});
    const auto dp = registry_resolve(DistanceSpec{"meta_prob", {}, probs});
    int bad_l = 0, bad_p = 0;
    for (int rep = 0; rep < kCases; ++rep) {
      const Instance a{"i" + std::to_string(id(rng)), Grid(1, 1, {0.0})};
      const Instance b{"i" + std::to_string(id(rng)), Grid(1, 1, {0.0})};
      const double v = (*dl)(a, b);
      bad_l += !contract(*dl, a, b) || (v != 0.0 && v != 1.0);
      bad_p += !contract(*dp, a, b);
    }
    tally("meta_class", bad_l);
    tally("meta_prob", bad_p);
  }
  {
    // DTW against exhaustive path enumeration.
    int bad = 0;
    std::uniform_int_distribution<std::size_t> small(1, 6), window(0, 3);
    for (int rep = 0; rep < 2000; ++rep) {
      const std::size_t p = 1 + rep % 2;
      const Grid x = pftest::random_series(rng, p, small(rng)), y = pftest::random_series(rng, p, small(rng));
      const DtwWindow w = rep % 3 == 0 ? DtwWindow{} : DtwWindow{window(rng)};
      const double expect = dtw_oracle(x, y, w);
      const DistanceSpec spec = DistanceSpec::parse(w ? "dtw_d:w=" + std::to_string(*w) : std::string("dtw_d"));
      const double got = (*registry_resolve(spec))({"x", x}, {"y", y});
      bad += std::abs(got - expect) > 1e-9 * std::max(1.0, expect);
    }
    tally("dtw_oracle", bad);
  }
  {
    // WL: permutation invariance plus a hand-computed pair.
    int bad = 0;
    for (int rep = 0; rep < 2000; ++rep) {
      const Graph g = pftest::random_graph(rng, 1 + rep % 9, 0.4, 3);
      const Graph h = pftest::permuted(g, rng);
      for (int depth = 0; depth <= 3; ++depth) bad += wl_distance(g, h, depth) != 0.0;
    }
    const Graph triangle({0, 0, 0}, {{0, 1}, {1, 2}, {0, 2}});
    const Graph path({0, 0, 0}, {{0, 1}, {1, 2}});
    bad += std::abs(wl_distance(triangle, path, 1) - 1.0 / 3.0) > 1e-12;
    tally("wl_oracle", bad);
  }
  std::string detail = std::to_string(checked) + " checks";
  for (const auto& f : failures) detail += ", failed " + f;
  return verdict(failures.empty(), detail);
}

struct Criterion {
  std::string name;
  std::function<Result(const Context&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"reconstruction", reconstruction}, {"row_stochastic", row_stochastic},
      {"oracle", oracle},                 {"penguins", penguin_bench},
      {"sphere", sphere_bench},           {"proteins", proteins_bench},
      {"vowels", vowels_bench},           {"flood", flood_bench},
      {"meta", meta_bench},               {"scaling", scaling_bench},
      {"hull", hull},                     {"distance_contract", distance_contract},
  };
  return all;
}

fs::path default_data_dir() {
  if (const char* env = std::getenv("PROXFOREST_DATA_DIR"); env && *env) return env;
#ifdef PROXFOREST_DATA_DIR
  return PROXFOREST_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"proxforest acceptance criteria", "proxforest_acceptance"};
  Context ctx;
  ctx.data_dir = default_data_dir();
  std::vector<std::string> names, tolerated;
  bool list = false;
  app.add_option("names", names, "Criteria to run (default: all)");
  app.add_option("--data-dir", ctx.data_dir, "Dataset directory");
  app.add_option("--threads", ctx.threads, "Worker threads (0 = hardware)");
  app.add_option("--tolerate", tolerated, "Criterion whose failure does not fail the run (repeatable)")
      ->allow_extra_args(false);
  app.add_flag("--list", list, "Print criterion names and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& c : criteria()) std::printf("%s\n", c.name.c_str());
    return 0;
  }
  std::vector<const Criterion*> selected;
  for (const auto& c : criteria()) {
    if (names.empty() || std::find(names.begin(), names.end(), c.name) != names.end()) selected.push_back(&c);
  }
  for (const auto& n : names) {
    const bool known = std::any_of(criteria().begin(), criteria().end(), [&](const Criterion& c) { return c.name == n; });
    if (!known) {
      std::fprintf(stderr, "unknown criterion: %s\n", n.c_str());
      return 2;
    }
  }

  std::size_t failed = 0, skipped = 0;
  for (const Criterion* c : selected) {
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c->run(ctx);
    } catch (const MissingDatasetError& e) {
      r = {Outcome::skip, e.what()};
    } catch (const std::exception& e) {
      r = {Outcome::fail, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool tolerate = std::find(tolerated.begin(), tolerated.end(), c->name) != tolerated.end();
    const char* tag = r.outcome == Outcome::pass ? "PASS" : r.outcome == Outcome::fail ? "FAIL" : "SKIP";
    std::printf("%s %s: %s (%.1f s)%s\n", tag, c->name.c_str(), r.detail.c_str(), secs,
                r.outcome == Outcome::fail && tolerate ? " [known failure, tolerated]" : "");
    std::fflush(stdout);
    if (r.outcome == Outcome::fail && !tolerate) ++failed;
    if (r.outcome == Outcome::skip) ++skipped;
  }
  if (failed) return 1;
  if (skipped == selected.size()) return 77;
  return 0;
}

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
// pfgap: command-line front end for the proxforest library.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "proxforest/analyze.hpp"
#include "proxforest/bench.hpp"
#include "proxforest/csv.hpp"
#include "proxforest/error.hpp"
#include "proxforest/forest.hpp"
#include "proxforest/gap.hpp"
#include "proxforest/hash.hpp"
#include "proxforest/impute.hpp"
#include "proxforest/kernels.hpp"
#include "proxforest/log.hpp"
#include "proxforest/meta.hpp"
#include "proxforest/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace proxforest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct DataArgs {
  std::string path;
  std::string label;
  std::string task = "classification";
  std::string id_column;
  std::vector<std::string> categorical;

  void add(CLI::App* app, const std::string& flag = "--data", bool required = true) {
    auto* opt = app->add_option(flag, path, "dataset (.csv, series .jsonl or graph .jsonl)");
    if (required) opt->required();
    app->add_option("--label", label, "label column (CSV input)");
    app->add_option("--task", task, "classification or regression")->check(CLI::IsMember({"classification", "regression"}));
    app->add_option("--id-column", id_column, "CSV column holding instance ids");
    app->add_option("--categorical", categorical, "CSV columns holding categorical codes");
  }

  Task parsed_task() const { return task == "regression" ? Task::regression : Task::classification; }

  Dataset load(const std::string& p, const std::string& fallback_label = "") const {
    CsvOptions o;
    o.label_column = label.empty() ? fallback_label : label;
    o.task = parsed_task();
    if (!id_column.empty()) o.id_column = id_column;
    o.categorical_columns = categorical;
    if (fs::path(p).extension() == ".csv" && o.label_column.empty()) {
      throw ConfigError("--label is required for CSV data");
    }
    return load_dataset(p, o);
  }

  // Data scored by a saved model: label, id and categorical columns default
  // to those of its training set.
  Dataset load_like(const Dataset& training) {
    task = std::string(to_string(training.task));
    if (id_column.empty()) id_column = training.id_name;
    if (categorical.empty()) {
      for (std::size_t j = 0; j < training.categorical.size(); ++j) {
        if (training.categorical[j]) categorical.push_back(training.feature_names[j]);
      }
    }
    return load(path, training.label_name);
  }
};

struct ForestArgs {
  std::size_t trees = 11;
  std::size_t r = 5;
  std::vector<std::string> distances;
  std::string choice = "per_node";
  std::string purity;
  std::string max_depth = "none";
  std::size_t min_leaf = 1;
  std::uint64_t seed = 0;
  std::string meta_predictions;
  std::string meta_form = "label";
  bool log_trees = false;

  void add(CLI::App* app) {
    app->add_option("--trees", trees, "number of trees")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--r", r, "candidate splits per node")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--dist", distances, "distance spec, repeatable (name or name:key=value,...)");
    app->add_option("--distance-choice", choice, "per_node or per_tree")->capture_default_str();
    app->add_option("--purity", purity, "gini (classification), variance or mad (regression)");
    app->add_option("--max-depth", max_depth, "maximum tree depth or none")->capture_default_str();
    app->add_option("--min-leaf", min_leaf, "nodes with fewer in-bag draws become leaves")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("--meta-predictions", meta_predictions, "pretrained-model predictions CSV; adds a meta distance");
    app->add_option("--meta-form", meta_form, "label (meta_class) or probability (meta_prob)")
        ->check(CLI::IsMember({"label", "probability"}))
        ->capture_default_str();
    app->add_flag("--log-trees", log_trees, "log one line per grown tree");
  }

  ForestConfig config(const Dataset& train, Task task) const {
    ForestConfig c;
    c.n_trees = trees;
    c.candidates = r;
    c.task = task;
    c.purity = purity.empty() ? (task == Task::classification ? Purity::gini : Purity::variance) : parse_purity(purity);
    c.distance_choice = parse_distance_choice(choice);
    if (max_depth != "none" && max_depth != "inf") {
      try {
        c.max_depth = static_cast<std::size_t>(std::stoull(max_depth));
      } catch (const std::exception&) {
        throw ConfigError("--max-depth must be a nonnegative integer or none");
      }
    }
    c.min_leaf = min_leaf;
    c.seed = seed;
    for (const auto& d : distances) c.distances.push_back(DistanceSpec::parse(d));
    if (!meta_predictions.empty()) {
      auto table = std::make_shared<const PredictionTable>(load_predictions(meta_predictions));
      c = attach_meta_distance(c, table, meta_form == "label" ? MetaForm::label : MetaForm::probability, train);
    }
    if (c.distances.empty()) {
      c.distances.push_back(DistanceSpec::parse(train.kind == PayloadKind::vector   ? "euclidean"
                                                : train.kind == PayloadKind::series ? "dtw_d"
                                                                                    : "wl"));
    }
    return c;
  }
};

struct ImputeArgs {
  std::string init = "mean";
  std::size_t iterations = 5;
  std::string metric = "r2";
  std::string categorical_metric = "f1";
  std::size_t knn_k = 5;
  bool condition_on_label = false;

  void add(CLI::App* app) {
    app->add_option("--init", init, "mean, median, knn or linear")->capture_default_str();
    app->add_option("--iterations", iterations, "imputation rounds")->capture_default_str();
    app->add_option("--metric", metric, "r2, rmse, mae, f1 or accuracy")->capture_default_str();
    app->add_option("--categorical-metric", categorical_metric, "f1 or accuracy")->capture_default_str();
    app->add_option("--knn-k", knn_k, "neighbors for knn initialization")->capture_default_str();
    app->add_flag("--condition-on-label", condition_on_label, "mean/median initialization within label groups");
  }

  ImputeConfig config(std::size_t threads) const {
    ImputeConfig c;
    c.init = parse_init_method(init);
    c.iterations = iterations;
    c.metric = parse_impute_metric(metric);
    c.categorical_metric = parse_impute_metric(categorical_metric);
    c.knn_k = knn_k;
    c.condition_on_label = condition_on_label;
    c.threads = threads;
    return c;
  }
};

/// Provenance record written next to every run's outputs.
struct Manifest {
  std::vector<std::string> argv;
  std::string config;
  std::uint64_t seed = 0;
  std::vector<fs::path> artifacts;
  fs::path where;

  void write() const {
    json j;
    j["tool"] = "pfgap";
    j["argv"] = argv;
    j["cwd"] = fs::current_path().string();
    j["config"] = config;
    j["seed"] = seed;
    json a = json::object();
    for (const auto& p : artifacts) a[p.string()] = sha256_file(p);
    j["artifacts"] = a;
    std::ofstream out(where, std::ios::binary);
    if (!out) throw DataError("cannot write " + where.string());
    out << j.dump(2) << "\n";
  }
};

fs::path file_manifest(const fs::path& p) { return fs::path(p.string() + ".manifest.json"); }

std::string format(double v) { return csv::format_double(v); }

void print_score(const std::string& what, const Dataset& d, const std::vector<double>& pred) {
  std::vector<double> truth(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) truth[i] = d.target(i);
  if (d.task == Task::classification) {
    std::cout << what << " accuracy " << format(accuracy(truth, pred)) << "\n";
  } else {
    std::cout << what << " r2 " << format(r2_score(truth, pred)) << "\n";
  }
}

void write_predictions(const Dataset& d, const std::vector<double>& pred, const std::vector<std::string>& classes,
                       Task task, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"id", "prediction"});
  for (std::size_t i = 0; i < d.size(); ++i) {
    csv::write_row(out, {d.instances[i].id, task == Task::classification
                                               ? classes[static_cast<std::size_t>(pred[i])]
                                               : format(pred[i])});
  }
}

json report_json(const ImputationReport& r) {
  json j;
  j["selected_iteration"] = r.selected;
  j["metric"] = std::string(to_string(r.selection_metric));
  json its = json::array();
  for (const auto& it : r.iterations) {
    its.push_back({{"iteration", it.iteration},
                   {"score", it.score},
                   {"feature_scores", it.feature_scores},
                   {"imputed_entries", it.imputed_entries},
                   {"pseudo_entries", it.pseudo_entries},
                   {"fallbacks", it.fallbacks},
                   {"hull_violations", it.hull_violations},
                   {"uncovered_rows", it.uncovered_rows}});
  }
  j["iterations"] = its;
  return j;
}

std::vector<std::string> ids_of(const Dataset& d, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(d.instances[i].id);
  return out;
}

int run(std::vector<std::string> args);

int replay(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open " + manifest_path.string());
  const json m = json::parse(in);
  const auto argv = m.at("argv").get<std::vector<std::string>>();
  const fs::path cwd = m.at("cwd").get<std::string>();
  const fs::path previous = fs::current_path();
  fs::current_path(cwd);
  const int code = run(argv);
  std::vector<std::string> mismatched;
  for (const auto& [path, hash] : m.at("artifacts").items()) {
    if (!fs::exists(path) || sha256_file(path) != hash.get<std::string>()) mismatched.push_back(path);
  }
  fs::current_path(previous);
  if (code != kExitOk) return code;
  if (!mismatched.empty()) {
    for (const auto& p : mismatched) std::cerr << "replay: " << p << " differs from the recorded hash\n";
    return kExitInternal;
  }
  std::cout << "replay: " << m.at("artifacts").size() << " artifact(s) identical\n";
  return kExitOk;
}

int run(std::vector<std::string> args) {
  CLI::App app{"pfgap: generalized Proximity Forest with GAP proximities", "pfgap"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags override it");
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (default: PFGAP_THREADS or all cores)");
  std::string simd;
  app.add_option("--simd", simd, "force a kernel variant: scalar, avx2 or neon");

  Manifest manifest;
  manifest.argv = args;
  std::function<void()> action;

  // train
  auto* train = app.add_subcommand("train", "fit a forest and write the model");
  DataArgs train_data;
  ForestArgs train_forest;
  std::string train_model;
  train_data.add(train);
  train_forest.add(train);
  train->add_option("--model", train_model, "output model file")->required();
  train->callback([&] {
    action = [&] {
      const Dataset d = train_data.load(train_data.path);
      const ForestConfig cfg = train_forest.config(d, train_data.parsed_task());
      const Forest f = Forest::fit(d, cfg, {threads, train_forest.log_trees});
      f.save(train_model);
      const OobPrediction oob = f.predict_oob();
      std::vector<double> truth, pred;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!oob.covered[i]) continue;
        truth.push_back(d.target(i));
        pred.push_back(oob.values[i]);
      }
      const double coverage = static_cast<double>(truth.size()) / static_cast<double>(d.size());
      std::cout << "trees " << cfg.n_trees << ", oob coverage " << format(coverage) << "\n";
      std::cout << (d.task == Task::classification ? "oob accuracy " : "oob r2 ")
                << format(d.task == Task::classification ? accuracy(truth, pred) : r2_score(truth, pred)) << "\n";
      print_score("train", d, f.predict(d, threads));
      manifest.seed = cfg.seed;
      manifest.artifacts = {train_model};
      manifest.where = file_manifest(train_model);
    };
  });

  // predict
  auto* predict = app.add_subcommand("predict", "predict a dataset with a saved model");
  std::string predict_model, predict_out;
  DataArgs predict_data;
  predict_data.add(predict);
  predict->add_option("--model", predict_model, "model file")->required();
  predict->add_option("--out", predict_out, "predictions CSV (id,prediction)")->required();
  predict->callback([&] {
    action = [&] {
      const Forest f = Forest::load(predict_model);
      Dataset d = predict_data.load_like(f.training());
      align_labels(d, f.training().class_names);
      const auto pred = f.predict(d, threads);
      write_predictions(d, pred, f.training().class_names, f.config().task, predict_out);
      print_score("test", d, pred);
      manifest.seed = f.config().seed;
      manifest.artifacts = {predict_out};
      manifest.where = file_manifest(predict_out);
    };
  });

  // prox
  auto* prox = app.add_subcommand("prox", "export GAP proximities");
  std::string prox_model, prox_out, prox_dissim;
  DataArgs prox_data;
  bool prox_dense = false;
  prox_data.add(prox, "--data", false);
  prox->add_option("--model", prox_model, "model file")->required();
  prox->add_option("--out", prox_out, "output file (row,col,value triplets unless --dense)")->required();
  prox->add_flag("--dense", prox_dense, "dense CSV instead of triplets");
  prox->add_option("--dissimilarity", prox_dissim, "also write the sqrt(1 - p_sym) matrix (OOB only)");
  prox->callback([&] {
    action = [&] {
      const Forest f = Forest::load(prox_model);
      manifest.seed = f.config().seed;
      Dataset rows = f.training();
      GapMatrix gap;
      if (prox_data.path.empty()) {
        gap = compute_oob_proximities(f, threads);
      } else {
        rows = prox_data.load_like(f.training());
        gap = compute_test_proximities(f, rows, threads);
      }
      if (prox_dense) {
        write_dense(gap, rows, f.training(), prox_out);
      } else {
        write_triplets(gap, rows, f.training(), prox_out);
      }
      manifest.artifacts = {prox_out};
      if (!prox_dissim.empty()) {
        if (gap.kind != GapKind::oob) throw ConfigError("--dissimilarity needs OOB proximities (omit --data)");
        const Dissimilarity dis = symmetrize_and_dissimilarity(gap);
        write_matrix(dis.distance, ids_of(f.training(), dis.indices), prox_dissim);
        manifest.artifacts.push_back(prox_dissim);
      }
      std::cout << "rows " << gap.rows.size() << ", uncovered " << gap.uncovered.size() << "\n";
      manifest.where = file_manifest(prox_out);
    };
  });

  // outliers
  auto* outliers = app.add_subcommand("outliers", "within-class GAP outlier scores");
  std::string out_model, out_path;
  std::size_t top_q = 3;
  outliers->add_option("--model", out_model, "classification model file")->required();
  outliers->add_option("--out", out_path, "outlier CSV (id,class,raw,normalized,flag)")->required();
  outliers->add_option("--top-q", top_q, "flag this many top scores per class")->capture_default_str();
  outliers->callback([&] {
    action = [&] {
      const Forest f = Forest::load(out_model);
      if (f.config().task != Task::classification) throw ConfigError("outlier scores need a classification model");
      const GapMatrix gap = compute_oob_proximities(f, threads);
      const OutlierReport rep = outlier_scores(gap, f.training().labels, top_q);
      write_outliers(rep, f.training(), out_path);
      manifest.seed = f.config().seed;
      manifest.artifacts = {out_path};
      manifest.where = file_manifest(out_path);
    };
  });

  // mds
  auto* mds = app.add_subcommand("mds", "classical MDS embedding of OOB GAP dissimilarities");
  std::string mds_model, mds_out;
  std::size_t mds_dims = 2;
  mds->add_option("--model", mds_model, "model file")->required();
  mds->add_option("--out", mds_out, "embedding CSV (id,x1,...)")->required();
  mds->add_option("--dims", mds_dims, "embedding dimension")->capture_default_str();
  mds->callback([&] {
    action = [&] {
      const Forest f = Forest::load(mds_model);
      const Dissimilarity dis = symmetrize_and_dissimilarity(compute_oob_proximities(f, threads));
      const MdsResult m = classical_mds(dis.distance, mds_dims);
      write_embedding(m, ids_of(f.training(), dis.indices), mds_out);
      manifest.seed = f.config().seed;
      manifest.artifacts = {mds_out};
      manifest.where = file_manifest(mds_out);
    };
  });

  // impute
  auto* impute = app.add_subcommand("impute", "GAP-based iterative imputation");
  DataArgs imp_data;
  ForestArgs imp_forest;
  ImputeArgs imp_args;
  std::string imp_out, imp_report, imp_test, imp_test_out;
  imp_data.add(impute);
  imp_forest.add(impute);
  imp_args.add(impute);
  impute->add_option("--out", imp_out, "imputed training data (same format as the input)")->required();
  impute->add_option("--report", imp_report, "report JSON (default: <out>.report.json)");
  impute->add_option("--test", imp_test, "test data to impute with a forest fit on the imputed training data");
  impute->add_option("--test-out", imp_test_out, "imputed test data");
  impute->callback([&] {
    action = [&] {
      if (!imp_test.empty() && imp_test_out.empty()) throw ConfigError("--test needs --test-out");
      const Dataset d = imp_data.load(imp_data.path);
      const ForestConfig cfg = imp_forest.config(d, imp_data.parsed_task());
      const ImputeConfig icfg = imp_args.config(threads);
      const ImputationReport rep = gap_impute_train(d, cfg, icfg, {threads, imp_forest.log_trees});
      write_dataset(rep.imputed, imp_out);
      json rj = report_json(rep);
      manifest.artifacts = {imp_out};
      if (!imp_test.empty()) {
        Dataset test = imp_data.load(imp_test);
        align_labels(test, d.class_names);
        const Forest f = Forest::fit(rep.imputed, cfg, {threads});
        const TestImputation ti = gap_impute_test(rep.imputed, test, f, icfg);
        write_dataset(ti.imputed, imp_test_out);
        rj["test"] = {{"imputed_entries", ti.imputed_entries},
                      {"fallbacks", ti.fallbacks},
                      {"hull_violations", ti.hull_violations}};
        print_score("test (imputed)", ti.imputed, f.predict(ti.imputed, threads));
        manifest.artifacts.push_back(imp_test_out);
      }
      const fs::path report_path = imp_report.empty() ? fs::path(imp_out + ".report.json") : fs::path(imp_report);
      std::ofstream(report_path, std::ios::binary) << rj.dump(2) << "\n";
      manifest.artifacts.push_back(report_path);
      const auto& sel = rep.iterations[rep.selected];
      std::cout << "selected iteration " << rep.selected << ", " << to_string(rep.selection_metric) << " "
                << format(sel.score) << ", imputed " << sel.imputed_entries << ", fallbacks " << sel.fallbacks
                << "\n";
      manifest.seed = cfg.seed;
      manifest.where = file_manifest(imp_out);
    };
  });

  // bench
  auto* bench = app.add_subcommand("bench", "run a benchmark protocol");
  std::string bench_name, bench_out, bench_data = "data", bench_sizes;
  std::vector<std::uint64_t> bench_seeds;
  std::vector<std::string> bench_params;
  bench->add_option("name", bench_name, "experiment")->required()->check(CLI::IsMember(experiment_names()));
  bench->add_option("--seed", bench_seeds, "seed(s); default: the protocol's seed list");
  bench->add_option("--data-dir", bench_data, "directory written by tools/fetch.sh")->capture_default_str();
  bench->add_option("--out", bench_out, "report directory (default: bench-<name>)");
  bench->add_option("--param", bench_params, "experiment parameter key=value, repeatable");
  bench->add_option("--sizes", bench_sizes, "scaling: comma-separated training sizes");
  bench->callback([&] {
    action = [&] {
      BenchOptions o;
      o.seeds = bench_seeds;
      o.data_dir = bench_data;
      o.threads = threads;
      for (const auto& p : bench_params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + p + "'");
        o.params[p.substr(0, eq)] = p.substr(eq + 1);
      }
      if (!bench_sizes.empty()) o.params["sizes"] = bench_sizes;
      const auto start = std::chrono::steady_clock::now();
      const BenchReport r = run_experiment(bench_name, o);
      const fs::path dir = bench_out.empty() ? fs::path("bench-" + bench_name) : fs::path(bench_out);
      r.write(dir);
      for (const auto& [k, v] : r.summary) std::cout << k << " " << format(v) << "\n";
      for (const auto& n : r.notes) std::cout << "note: " << n << "\n";
      log_info(bench_name + " finished in " +
               format(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()) + " s");
      manifest.seed = bench_seeds.empty() ? 0 : bench_seeds.front();
      manifest.artifacts = {dir / "report.json", dir / "table.csv"};
      manifest.where = dir / "manifest.json";
    };
  });

  // replay
  auto* rep = app.add_subcommand("replay", "re-run a manifest and check its artifact hashes");
  std::string rep_path;
  rep->add_option("manifest", rep_path, "manifest.json of an earlier run")->required();
  int replay_code = -1;
  rep->callback([&] { action = [&] { replay_code = replay(rep_path); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (!simd.empty()) {
    const kernels::Isa isa = simd == "scalar" ? kernels::Isa::scalar
                           : simd == "avx2"   ? kernels::Isa::avx2
                           : simd == "neon"   ? kernels::Isa::neon
                                              : throw ConfigError("--simd must be scalar, avx2 or neon");
    kernels::select(isa);
  }
  if (threads == 0) threads = default_thread_count();
  action();
  if (replay_code >= 0) return replay_code;
  // Keep global options and the options of the subcommand that ran.
  const std::string prefix = app.get_subcommands().front()->get_name() + ".";
  std::istringstream all(app.config_to_str(true, false));
  for (std::string line; std::getline(all, line);) {
    const auto eq = line.find('=');
    if (line.rfind(prefix, 0) == 0 || line.substr(0, eq).find('.') == std::string::npos) manifest.config += line + "\n";
  }
  manifest.write();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const Error& e) {
    std::cerr << "pfgap: " << e.what() << "\n";
    switch (e.category()) {
      case Error::Category::usage:
        return kExitUsage;
      case Error::Category::data:
        return kExitData;
      case Error::Category::internal:
        return kExitInternal;
    }
  } catch (const std::exception& e) {
    std::cerr << "pfgap: internal error: " << e.what() << "\n";
  }
  return kExitInternal;
}

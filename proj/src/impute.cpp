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
#include "proxforest/impute.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "proxforest/distance.hpp"
#include "proxforest/error.hpp"
#include "proxforest/log.hpp"
#include "proxforest/parallel.hpp"
#include "proxforest/random.hpp"

namespace proxforest {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool observed(const Grid& g, std::size_t j, std::size_t t) { return !g.is_missing(j, t) && !std::isnan(g.at(j, t)); }

std::size_t max_length(const Dataset& d) {
  std::size_t m = 0;
  for (const auto& x : d.instances) m = std::max(m, x.grid().length());
  return m;
}

void require_grids(const Dataset& d, const char* what) {
  if (d.kind == PayloadKind::graph) throw DataError(std::string(what) + ": graph datasets cannot be imputed");
}

std::string column_name(const Dataset& d, std::size_t j, std::size_t t) {
  const std::string f = j < d.feature_names.size() ? d.feature_names[j] : "ch" + std::to_string(j);
  return d.kind == PayloadKind::series ? f + "[" + std::to_string(t) + "]" : f;
}

/// Observed values per (feature, time) column, optionally restricted to one
/// label group.
class Columns {
 public:
  Columns(const Dataset& d, std::optional<int> label) : length_(max_length(d)), values_(d.feature_count() * length_) {
    for (std::size_t n = 0; n < d.size(); ++n) {
      if (label && d.labels[n] != *label) continue;
      const Grid& g = d.instances[n].grid();
      for (std::size_t j = 0; j < g.channels(); ++j) {
        for (std::size_t t = 0; t < g.length(); ++t) {
          if (observed(g, j, t)) values_[j * length_ + t].push_back(g.at(j, t));
        }
      }
    }
    for (auto& v : values_) std::sort(v.begin(), v.end());
  }

  std::optional<double> stat(std::size_t j, std::size_t t, InitMethod m) const {
    if (t >= length_) return std::nullopt;
    const auto& v = values_[j * length_ + t];
    if (v.empty()) return std::nullopt;
    if (m == InitMethod::median) {
      const std::size_t h = v.size() / 2;
      return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }

 private:
  std::size_t length_;
  std::vector<std::vector<double>> values_;
};

class MissingColumns {
 public:
  void add(const std::string& name) { names_.insert(name); }
  void raise_if_any() const {
    if (names_.empty()) return;
    std::string list;
    std::size_t k = 0;
    for (const auto& n : names_) {
      if (k++ == 10) {
        list += ", ...";
        break;
      }
      list += (list.empty() ? "" : ", ") + n;
    }
    throw DataError("no observed values to initialize column(s): " + list);
  }

 private:
  std::set<std::string> names_;
};

/// Values with every masked entry set to NaN, so masked comparisons only see
/// originally observed data.
std::vector<double> raw_values(const Grid& g) {
  std::vector<double> v(g.values().begin(), g.values().end());
  for (std::size_t j = 0; j < g.channels(); ++j) {
    for (std::size_t t = 0; t < g.length(); ++t) {
      if (g.is_missing(j, t)) v[j * g.length() + t] = kNaN;
    }
  }
  return v;
}

void fill_statistic(Dataset& out, const Dataset& d, const Dataset& ref, const ImputeConfig& cfg, bool by_label) {
  const Columns global(ref, std::nullopt);
  std::map<int, Columns> groups;
  if (by_label) {
    for (int c = 0; c < static_cast<int>(ref.class_count()); ++c) groups.emplace(c, Columns(ref, c));
  }
  MissingColumns missing;
  for (std::size_t n = 0; n < out.size(); ++n) {
    Grid& g = out.instances[n].grid();
    for (std::size_t j = 0; j < g.channels(); ++j) {
      for (std::size_t t = 0; t < g.length(); ++t) {
        if (!std::isnan(g.at(j, t))) continue;
        std::optional<double> v;
        if (by_label) v = groups.at(d.labels[n]).stat(j, t, cfg.init);
        if (!v) v = global.stat(j, t, cfg.init);
        if (!v) {
          missing.add(column_name(d, j, t));
          continue;
        }
        g.at(j, t) = *v;
      }
    }
  }
  missing.raise_if_any();
}

void fill_knn(Dataset& out, const Dataset& ref, bool same, const ImputeConfig& cfg) {
  std::vector<std::vector<double>> ref_raw;
  for (const auto& x : ref.instances) ref_raw.push_back(raw_values(x.grid()));
  const Columns global(ref, std::nullopt);
  std::vector<std::string> errors(out.size());
  parallel_for(out.size(), cfg.threads, [&](std::size_t n) {
    Grid& g = out.instances[n].grid();
    if (!g.has_unfilled()) return;
    const std::vector<double> mine(g.values().begin(), g.values().end());
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      if (same && k == n) continue;
      if (ref_raw[k].size() != mine.size()) throw DataError("knn initialization needs equal-shape instances");
      order.emplace_back(euclidean(mine, ref_raw[k], MissingPolicy::skip), k);
    }
    std::sort(order.begin(), order.end());
    for (std::size_t j = 0; j < g.channels(); ++j) {
      for (std::size_t t = 0; t < g.length(); ++t) {
        if (!std::isnan(mine[j * g.length() + t])) continue;
        double sum = 0.0;
        std::size_t used = 0;
        for (const auto& [dist, k] : order) {
          const double v = ref_raw[k][j * g.length() + t];
          if (std::isnan(v)) continue;
          sum += v;
          if (++used == cfg.knn_k) break;
        }
        if (used > 0) {
          g.at(j, t) = sum / static_cast<double>(used);
        } else if (auto v = global.stat(j, t, InitMethod::mean)) {
          g.at(j, t) = *v;
        } else {
          errors[n] = column_name(ref, j, t);
        }
      }
    }
  });
  MissingColumns missing;
  for (const auto& e : errors) {
    if (!e.empty()) missing.add(e);
  }
  missing.raise_if_any();
}

void fill_linear(Dataset& out, const Dataset& ref) {
  const Columns global(ref, std::nullopt);
  MissingColumns missing;
  for (auto& x : out.instances) {
    Grid& g = x.grid();
    for (std::size_t j = 0; j < g.channels(); ++j) {
      std::vector<std::size_t> obs;
      for (std::size_t t = 0; t < g.length(); ++t) {
        if (!std::isnan(g.at(j, t))) obs.push_back(t);
      }
      if (obs.empty()) {
        for (std::size_t t = 0; t < g.length(); ++t) {
          if (auto v = global.stat(j, t, InitMethod::mean)) {
            g.at(j, t) = *v;
          } else {
            missing.add(column_name(ref, j, t));
          }
        }
        continue;
      }
      std::size_t next = 0;  // first observed position >= t
      for (std::size_t t = 0; t < g.length(); ++t) {
        while (next < obs.size() && obs[next] < t) ++next;
        if (next < obs.size() && obs[next] == t) continue;
        if (next == 0) {
          g.at(j, t) = g.at(j, obs.front());
        } else if (next == obs.size()) {
          g.at(j, t) = g.at(j, obs.back());
        } else {
          const std::size_t a = obs[next - 1];
          const std::size_t b = obs[next];
          const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
          g.at(j, t) = g.at(j, a) + w * (g.at(j, b) - g.at(j, a));
        }
      }
    }
  }
  missing.raise_if_any();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    s += x;
    ++n;
  }
  return n ? s / static_cast<double>(n) : kNaN;
}

struct Scored {
  double score = kNaN;
  std::vector<double> features;
  ImputeMetric metric = ImputeMetric::r2;
};

Scored score_pass(const PassResult& pr, const Dataset& d, const ImputeConfig& cfg) {
  Scored s;
  const ImputeMetric cat_metric = is_categorical_metric(cfg.metric) ? cfg.metric : cfg.categorical_metric;
  std::vector<double> cont;
  std::vector<double> cat;
  for (std::size_t j = 0; j < d.feature_count(); ++j) {
    const bool c = d.categorical[j];
    const double v = internal_score(pr.pseudo_truth[j], pr.pseudo_pred[j], c ? cat_metric : cfg.metric);
    s.features.push_back(v);
    (c ? cat : cont).push_back(v);
  }
  const bool any_continuous = std::find(d.categorical.begin(), d.categorical.end(), false) != d.categorical.end();
  s.metric = any_continuous ? cfg.metric : cat_metric;
  s.score = mean_of(any_continuous ? cont : cat);
  return s;
}

}  // namespace

std::string_view to_string(InitMethod m) {
  switch (m) {
    case InitMethod::mean:
      return "mean";
    case InitMethod::median:
      return "median";
    case InitMethod::knn:
      return "knn";
    case InitMethod::linear:
      return "linear";
  }
  return "?";
}

std::string_view to_string(ImputeMetric m) {
  switch (m) {
    case ImputeMetric::r2:
      return "r2";
    case ImputeMetric::rmse:
      return "rmse";
    case ImputeMetric::mae:
      return "mae";
    case ImputeMetric::f1:
      return "f1";
    case ImputeMetric::accuracy:
      return "accuracy";
  }
  return "?";
}

InitMethod parse_init_method(std::string_view s) {
  for (auto m : {InitMethod::mean, InitMethod::median, InitMethod::knn, InitMethod::linear}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("init must be mean, median, knn or linear, got '" + std::string(s) + "'");
}

ImputeMetric parse_impute_metric(std::string_view s) {
  for (auto m : {ImputeMetric::r2, ImputeMetric::rmse, ImputeMetric::mae, ImputeMetric::f1, ImputeMetric::accuracy}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("metric must be r2, rmse, mae, f1 or accuracy, got '" + std::string(s) + "'");
}

bool lower_is_better(ImputeMetric m) { return m == ImputeMetric::rmse || m == ImputeMetric::mae; }
bool is_categorical_metric(ImputeMetric m) { return m == ImputeMetric::f1 || m == ImputeMetric::accuracy; }

void ImputeConfig::validate(const Dataset& d) const {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (init == InitMethod::knn && knn_k < 1) throw ConfigError("knn_k must be at least 1");
  if (init == InitMethod::linear && d.kind != PayloadKind::series) {
    throw ConfigError("linear initialization needs series data");
  }
  if (condition_on_label && d.task != Task::classification) {
    throw ConfigError("condition_on_label needs class labels");
  }
  if (condition_on_label && init != InitMethod::mean && init != InitMethod::median) {
    throw ConfigError("condition_on_label applies to mean and median initialization");
  }
  if (!is_categorical_metric(categorical_metric)) throw ConfigError("categorical_metric must be f1 or accuracy");
  const bool any_continuous = std::find(d.categorical.begin(), d.categorical.end(), false) != d.categorical.end();
  if (any_continuous && is_categorical_metric(metric)) {
    throw ConfigError("metric " + std::string(to_string(metric)) + " does not apply to continuous features");
  }
}

Dataset initialize(const Dataset& d, const ImputeConfig& cfg, const Dataset* reference) {
  require_grids(d, "initialize");
  Dataset out = d;
  const bool any = std::any_of(d.instances.begin(), d.instances.end(),
                               [](const Instance& x) { return x.grid().has_unfilled(); });
  if (!any) return out;
  const Dataset& ref = reference ? *reference : d;
  require_grids(ref, "initialize");
  if (ref.feature_count() != d.feature_count()) throw DataError("initialize: reference has a different feature count");
  switch (cfg.init) {
    case InitMethod::mean:
    case InitMethod::median:
      fill_statistic(out, d, ref, cfg, cfg.condition_on_label && reference == nullptr);
      break;
    case InitMethod::knn:
      fill_knn(out, ref, reference == nullptr, cfg);
      break;
    case InitMethod::linear:
      if (d.kind != PayloadKind::series) throw ConfigError("linear initialization needs series data");
      fill_linear(out, ref);
      break;
  }
  return out;
}

double internal_score(std::span<const double> truth, std::span<const double> imputed, ImputeMetric metric) {
  if (truth.size() != imputed.size()) throw DataError("internal_score: length mismatch");
  const std::size_t n = truth.size();
  if (n == 0) return kNaN;
  switch (metric) {
    case ImputeMetric::r2: {
      const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(n);
      double ss_res = 0.0;
      double ss_tot = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ss_res += (truth[i] - imputed[i]) * (truth[i] - imputed[i]);
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
      }
      return ss_tot == 0.0 ? kNaN : 1.0 - ss_res / ss_tot;
    }
    case ImputeMetric::rmse:
    case ImputeMetric::mae: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = truth[i] - imputed[i];
        s += metric == ImputeMetric::rmse ? e * e : std::abs(e);
      }
      s /= static_cast<double>(n);
      return metric == ImputeMetric::rmse ? std::sqrt(s) : s;
    }
    case ImputeMetric::accuracy: {
      std::size_t hit = 0;
      for (std::size_t i = 0; i < n; ++i) hit += truth[i] == imputed[i];
      return static_cast<double>(hit) / static_cast<double>(n);
    }
    case ImputeMetric::f1: {
      std::set<double> classes(truth.begin(), truth.end());
      classes.insert(imputed.begin(), imputed.end());
      double total = 0.0;
      for (double c : classes) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const bool t = truth[i] == c;
          const bool p = imputed[i] == c;
          tp += t && p;
          fp += !t && p;
          fn += t && !p;
        }
        total += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
      }
      return total / static_cast<double>(classes.size());
    }
  }
  return kNaN;
}

PassResult gap_pass(const GapMatrix& gap, const Dataset& donors, const Dataset& target, const Dataset& fallback,
                    bool pseudo, std::size_t threads) {
  const std::size_t p = target.feature_count();
  struct RowOut {
    std::size_t imputed = 0, fallbacks = 0, hull = 0, pseudo = 0;
    std::vector<std::vector<double>> truth, pred;
  };
  PassResult out;
  out.imputed = target;
  std::vector<RowOut> per_row(target.size());
  std::vector<char> has_row(target.size(), 0);
  for (const auto& r : gap.rows) has_row[r.row] = 1;

  auto impute_row = [&](const GapRow* r, std::size_t n) {
    RowOut& ro = per_row[n];
    ro.truth.resize(p);
    ro.pred.resize(p);
    const Grid& in = target.instances[n].grid();
    Grid& dst = out.imputed.instances[n].grid();
    std::map<double, double> votes;
    for (std::size_t j = 0; j < in.channels(); ++j) {
      const bool categorical = target.categorical[j];
      for (std::size_t t = 0; t < in.length(); ++t) {
        const bool miss = in.is_missing(j, t);
        if (!miss && !pseudo) continue;
        double num = 0.0, den = 0.0;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        votes.clear();
        if (r) {
          for (std::size_t k = 0; k < r->columns.size(); ++k) {
            const Grid& dg = donors.instances[r->columns[k]].grid();
            if (t >= dg.length() || !observed(dg, j, t)) continue;
            const double w = r->values[k];
            const double v = dg.at(j, t);
            den += w;
            if (categorical) {
              votes[v] += w;
            } else {
              num += w * v;
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
          }
        }
        if (den <= 0.0) {
          if (miss) {
            dst.at(j, t) = fallback.instances[n].grid().at(j, t);
            ++ro.fallbacks;
          }
          continue;
        }
        double value;
        if (categorical) {
          value = votes.begin()->first;
          double best = votes.begin()->second;
          for (const auto& [code, w] : votes) {
            if (w > best + kScoreTieTolerance) {
              best = w;
              value = code;
            }
          }
        } else {
          value = num / den;
          const double tol = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
          if (miss && (value < lo - tol || value > hi + tol)) ++ro.hull;
        }
        if (miss) {
          dst.at(j, t) = value;
          ++ro.imputed;
        } else {
          ro.truth[j].push_back(in.at(j, t));
          ro.pred[j].push_back(value);
          ++ro.pseudo;
        }
      }
    }
  };

  parallel_for(target.size(), threads, [&](std::size_t n) { impute_row(has_row[n] ? gap.find(n) : nullptr, n); });

  out.pseudo_truth.assign(p, {});
  out.pseudo_pred.assign(p, {});
  for (auto& ro : per_row) {
    out.imputed_entries += ro.imputed;
    out.fallbacks += ro.fallbacks;
    out.hull_violations += ro.hull;
    out.pseudo_entries += ro.pseudo;
    for (std::size_t j = 0; j < ro.truth.size(); ++j) {
      out.pseudo_truth[j].insert(out.pseudo_truth[j].end(), ro.truth[j].begin(), ro.truth[j].end());
      out.pseudo_pred[j].insert(out.pseudo_pred[j].end(), ro.pred[j].begin(), ro.pred[j].end());
    }
  }
  return out;
}

ImputationReport gap_impute_train(const Dataset& d, const ForestConfig& forest_cfg, const ImputeConfig& cfg,
                                  const FitOptions& options) {
  require_grids(d, "gap_impute_train");
  cfg.validate(d);
  const Dataset init = initialize(d, cfg);
  Dataset x = init;
  ImputationReport report;
  std::optional<std::size_t> best;
  Dataset best_x;
  std::shared_ptr<const Forest> best_forest;
  std::shared_ptr<const Forest> last_forest;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    ForestConfig fcfg = forest_cfg;
    fcfg.seed = derive_seed(forest_cfg.seed, it);
    auto forest = std::make_shared<const Forest>(Forest::fit(x, fcfg, options));
    const GapMatrix gap = compute_oob_proximities(*forest, cfg.threads);
    PassResult pr = gap_pass(gap, x, x, init, true, cfg.threads);
    const Scored s = score_pass(pr, d, cfg);
    IterationRecord rec;
    rec.iteration = it;
    rec.score = s.score;
    rec.feature_scores = s.features;
    rec.imputed_entries = pr.imputed_entries;
    rec.pseudo_entries = pr.pseudo_entries;
    rec.fallbacks = pr.fallbacks;
    rec.hull_violations = pr.hull_violations;
    rec.uncovered_rows = gap.uncovered.size();
    report.selection_metric = s.metric;
    report.iterations.push_back(rec);
    const bool better = !std::isnan(s.score) &&
                        (!best || (lower_is_better(s.metric) ? s.score < report.iterations[*best].score
                                                             : s.score > report.iterations[*best].score));
    if (better) {
      best = it;
      best_x = pr.imputed;
      best_forest = forest;
    }
    x = std::move(pr.imputed);
    last_forest = forest;
  }
  if (best) {
    report.selected = *best;
    report.imputed = std::move(best_x);
    report.forest = best_forest;
  } else {
    log_warning("imputation score undefined in every iteration; keeping the last iteration");
    report.selected = cfg.iterations - 1;
    report.imputed = std::move(x);
    report.forest = last_forest;
  }
  return report;
}

TestImputation gap_impute_test(const Dataset& train, const Dataset& test, const Forest& forest,
                               const ImputeConfig& cfg) {
  require_grids(test, "gap_impute_test");
  require_grids(train, "gap_impute_test");
  const Dataset& fit_data = forest.training();
  if (fit_data.size() != train.size()) throw DataError("gap_impute_test: forest was not trained on this training set");
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (fit_data.instances[i].id != train.instances[i].id) {
      throw DataError("gap_impute_test: training ids differ from the forest's training data");
    }
  }
  if (train.feature_count() != test.feature_count()) throw DataError("gap_impute_test: feature counts differ");
  if (train.size() > 0) {
    const std::size_t len = train.instances[0].grid().length();
    auto misaligned = [len](const Instance& x) { return x.grid().length() != len; };
    if (std::any_of(train.instances.begin(), train.instances.end(), misaligned) ||
        std::any_of(test.instances.begin(), test.instances.end(), misaligned)) {
      throw DataError("gap_impute_test: train and test series must share one time grid of length " +
                      std::to_string(len));
    }
  }
  ImputeConfig test_cfg = cfg;
  test_cfg.condition_on_label = false;
  TestImputation out;
  out.initialized = initialize(test, test_cfg, &train);
  const GapMatrix gap = compute_test_proximities(forest, out.initialized, cfg.threads);
  PassResult pr = gap_pass(gap, train, out.initialized, out.initialized, false, cfg.threads);
  out.imputed = std::move(pr.imputed);
  out.imputed_entries = pr.imputed_entries;
  out.fallbacks = pr.fallbacks;
  out.hull_violations = pr.hull_violations;
  return out;
}

}  // namespace proxforest

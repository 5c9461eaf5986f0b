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
#include "proxforest/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "proxforest/csv.hpp"
#include "proxforest/parallel.hpp"

namespace proxforest {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> masked(const Grid& g) {
  std::vector<double> v(g.values().begin(), g.values().end());
  for (std::size_t j = 0; j < g.channels(); ++j) {
    for (std::size_t t = 0; t < g.length(); ++t) {
      if (g.is_missing(j, t)) v[j * g.length() + t] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return v;
}

std::array<double, 3> unit_normal(Rng& rng) {
  std::normal_distribution<double> normal;
  for (;;) {
    std::array<double, 3> v{normal(rng), normal(rng), normal(rng)};
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (n > 1e-12) return {v[0] / n, v[1] / n, v[2] / n};
  }
}

}  // namespace

std::vector<std::size_t> nearest_neighbors(const Dataset& train, const Instance& x, std::size_t k,
                                           const DistanceMeasure& dist, std::optional<std::size_t> exclude) {
  std::vector<std::pair<double, std::size_t>> all;
  all.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (exclude && *exclude == i) continue;
    all.emplace_back(dist(x, train.instances[i]), i);
  }
  if (k > all.size()) throw ConfigError("k (" + std::to_string(k) + ") exceeds the number of training instances");
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
  return out;
}

KnnResult knn_baseline(const Dataset& train_in, const Dataset& test_in, std::size_t k, const DistanceMeasure& dist,
                       bool impute, std::size_t threads) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (k > train_in.size()) throw ConfigError("k (" + std::to_string(k) + ") exceeds the training set size");
  Dataset train_imputed, test_imputed;
  const Dataset* train = &train_in;
  const Dataset* test = &test_in;
  if (impute) {
    train_imputed = knn_impute(train_in, train_in, k, true, threads);
    test_imputed = knn_impute(test_in, train_in, k, false, threads);
    train = &train_imputed;
    test = &test_imputed;
  }
  KnnResult r;
  r.predictions.resize(test->size());
  parallel_for(test->size(), threads, [&](std::size_t i) {
    const auto nn = nearest_neighbors(*train, test->instances[i], k, dist);
    if (train->task == Task::classification) {
      std::vector<std::size_t> votes(train->class_count(), 0);
      for (std::size_t j : nn) ++votes[static_cast<std::size_t>(train->labels[j])];
      r.predictions[i] = static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    } else {
      double s = 0.0;
      for (std::size_t j : nn) s += train->responses[j];
      r.predictions[i] = s / static_cast<double>(k);
    }
  });
  r.distance_evaluations = test->size() * train->size();
  std::vector<double> truth(test->size());
  for (std::size_t i = 0; i < test->size(); ++i) truth[i] = test->target(i);
  r.score = train->task == Task::classification ? accuracy(truth, r.predictions) : r2_score(truth, r.predictions);
  return r;
}

Dataset knn_impute(const Dataset& target, const Dataset& donors, std::size_t k, bool same_set, std::size_t threads) {
  if (target.kind == PayloadKind::graph) throw DataError("knn_impute: graph datasets cannot be imputed");
  if (k < 1) throw ConfigError("k must be at least 1");
  std::vector<std::vector<double>> donor_raw;
  for (const auto& x : donors.instances) donor_raw.push_back(masked(x.grid()));
  Dataset out = target;
  parallel_for(target.size(), threads, [&](std::size_t n) {
    Grid& g = out.instances[n].grid();
    if (!g.has_missing()) return;
    const std::vector<double> mine = masked(g);
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < donors.size(); ++i) {
      if (same_set && i == n) continue;
      if (donor_raw[i].size() != mine.size()) throw DataError("knn_impute: instances differ in shape");
      order.emplace_back(euclidean(mine, donor_raw[i], MissingPolicy::skip), i);
    }
    std::sort(order.begin(), order.end());
    for (std::size_t j = 0; j < g.channels(); ++j) {
      for (std::size_t t = 0; t < g.length(); ++t) {
        if (!g.is_missing(j, t)) continue;
        std::vector<std::pair<double, double>> near;  // (distance, value)
        for (const auto& [d, i] : order) {
          const double v = donor_raw[i][j * g.length() + t];
          if (std::isnan(v)) continue;
          near.emplace_back(d, v);
          if (near.size() == k) break;
        }
        if (near.empty()) throw DataError("knn_impute: no donor observed at a missing position of " + target.instances[n].id);
        double num = 0.0, den = 0.0;
        if (near.front().first == 0.0) {
          for (const auto& [d, v] : near) {
            if (d == 0.0) {
              num += v;
              den += 1.0;
            }
          }
        } else {
          for (const auto& [d, v] : near) {
            if (std::isinf(d)) continue;
            num += v / d;
            den += 1.0 / d;
          }
          if (den == 0.0) {
            for (const auto& [d, v] : near) {
              num += v;
              den += 1.0;
            }
          }
        }
        g.at(j, t) = num / den;
      }
    }
  });
  return out;
}

double accuracy(std::span<const double> truth, std::span<const double> pred) {
  if (truth.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double r2_score(std::span<const double> truth, std::span<const double> pred) {
  if (truth.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double res = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    tot += (truth[i] - mean) * (truth[i] - mean);
  }
  return tot == 0.0 ? std::numeric_limits<double>::quiet_NaN() : 1.0 - res / tot;
}

std::array<double, 3> sample_vmf(const std::array<double, 3>& mean, double kappa, Rng& rng) {
  if (!(kappa > 0.0)) throw ConfigError("vMF concentration must be positive");
  constexpr double dim = 3.0;
  const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + (dim - 1.0) * (dim - 1.0))) / (dim - 1.0);
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + (dim - 1.0) * std::log(1.0 - x0 * x0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double w = 0.0;
  for (;;) {
    const double z = unif(rng);  // Beta(1, 1) on S^2
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = unif(rng);
    if (kappa * w + (dim - 1.0) * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }
  const double theta = 2.0 * kPi * unif(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
  // Sample around e3, then reflect e3 onto the mean (Householder).
  std::array<double, 3> x{s * std::cos(theta), s * std::sin(theta), w};
  std::array<double, 3> u{mean[0], mean[1], mean[2] - 1.0};
  const double uu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
  if (uu > 1e-300) {
    const double ux = u[0] * x[0] + u[1] * x[1] + u[2] * x[2];
    for (int i = 0; i < 3; ++i) x[i] -= 2.0 * ux / uu * u[i];
  }
  const double n = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  return {x[0] / n, x[1] / n, x[2] / n};
}

Dataset sample_vmf_clusters(std::size_t n_per_class, double kappa, std::uint64_t seed, double separation) {
  Rng rng = make_rng(seed, {0x766d66});
  const auto mu0 = unit_normal(rng);
  auto axis = unit_normal(rng);
  const double dot = axis[0] * mu0[0] + axis[1] * mu0[1] + axis[2] * mu0[2];
  for (int i = 0; i < 3; ++i) axis[i] -= dot * mu0[i];
  const double an = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  for (int i = 0; i < 3; ++i) axis[i] /= an;
  Dataset d;
  d.task = Task::classification;
  d.kind = PayloadKind::vector;
  d.class_names = {"0", "1"};
  d.feature_names = {"x", "y", "z"};
  d.categorical.assign(3, false);
  for (int c = 0; c < 2; ++c) {
    const double half = (c == 0 ? -0.5 : 0.5) * separation;
    std::array<double, 3> mean;
    for (int i = 0; i < 3; ++i) mean[i] = std::cos(half) * mu0[i] + std::sin(half) * axis[i];
    for (std::size_t k = 0; k < n_per_class; ++k) {
      const auto v = sample_vmf(mean, kappa, rng);
      d.instances.push_back({"s" + std::to_string(d.size()), Grid(3, 1, {v[0], v[1], v[2]})});
      d.labels.push_back(c);
    }
  }
  return d;
}

Dataset make_blobs(std::size_t n, std::size_t classes, std::size_t dims, double spread, std::uint64_t seed) {
  if (classes < 1 || dims < 1) throw ConfigError("blobs need at least one class and one dimension");
  Rng rng = make_rng(seed, {0x626c6f});
  std::uniform_real_distribution<double> box(-10.0, 10.0);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> centers(classes, std::vector<double>(dims));
  for (auto& c : centers) {
    for (double& v : c) v = box(rng);
  }
  Dataset d;
  d.task = Task::classification;
  d.kind = PayloadKind::vector;
  for (std::size_t c = 0; c < classes; ++c) d.class_names.push_back(std::to_string(c));
  for (std::size_t j = 0; j < dims; ++j) d.feature_names.push_back("f" + std::to_string(j));
  d.categorical.assign(dims, false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    std::vector<double> v(dims);
    for (std::size_t j = 0; j < dims; ++j) v[j] = centers[c][j] + spread * normal(rng);
    d.instances.push_back({"b" + std::to_string(i), Grid(dims, 1, std::move(v))});
    d.labels.push_back(static_cast<int>(c));
  }
  return d;
}

void NearestCentroid::fit(const Dataset& d) {
  if (d.task != Task::classification || d.kind == PayloadKind::graph || d.size() == 0) {
    throw DataError("nearest centroid needs a nonempty classification dataset of grids");
  }
  const std::size_t width = d.instances[0].grid().size();
  centroids_.assign(d.class_count(), std::vector<double>(width, 0.0));
  std::vector<std::size_t> counts(d.class_count(), 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto v = d.instances[i].grid().values();
    if (v.size() != width) throw DataError("nearest centroid needs equal-shape instances");
    auto& c = centroids_[static_cast<std::size_t>(d.labels[i])];
    for (std::size_t k = 0; k < width; ++k) c[k] += v[k];
    ++counts[static_cast<std::size_t>(d.labels[i])];
  }
  for (std::size_t c = 0; c < centroids_.size(); ++c) {
    for (double& x : centroids_[c]) x = counts[c] ? x / static_cast<double>(counts[c]) : std::numeric_limits<double>::infinity();
  }
}

int NearestCentroid::predict(const Instance& x) const {
  const auto v = x.grid().values();
  int best = 0;
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids_.size(); ++c) {
    if (centroids_[c].size() != v.size()) throw DataError("nearest centroid: instance shape differs from training");
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += (v[k] - centroids_[c][k]) * (v[k] - centroids_[c][k]);
    if (s < lo) {
      lo = s;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<double> NearestCentroid::predict(const Dataset& d) const {
  std::vector<double> out;
  for (const auto& x : d.instances) out.push_back(predict(x));
  return out;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["columns"] = columns;
  j["rows"] = rows;
  j["summary"] = summary;
  j["setup"] = setup;
  j["notes"] = notes;
  return j;
}

void BenchReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << to_json().dump(2) << "\n";
  }
  std::ofstream out(dir / "table.csv", std::ios::binary);
  csv::write_row(out, columns);
  for (const auto& r : rows) {
    std::vector<std::string> f;
    for (double v : r) f.push_back(csv::format_double(v));
    csv::write_row(out, f);
  }
}

}  // namespace proxforest

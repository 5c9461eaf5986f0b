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
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "proxforest/dataset.hpp"
#include "proxforest/distance.hpp"
#include "proxforest/error.hpp"
#include "proxforest/random.hpp"

namespace proxforest {

/// Indices of the k nearest training instances to x by brute force, nearest
/// first; equal distances order by training index.
std::vector<std::size_t> nearest_neighbors(const Dataset& train, const Instance& x, std::size_t k,
                                           const DistanceMeasure& dist, std::optional<std::size_t> exclude = {});

struct KnnResult {
  std::vector<double> predictions;
  double score = 0.0;  // accuracy or R^2 against the test targets
  std::size_t distance_evaluations = 0;
};

/// Brute-force k-NN: majority vote (lowest class on ties) or mean target.
/// With `impute`, missing entries of train and test are first filled by
/// knn_impute using train as donors.
KnnResult knn_baseline(const Dataset& train, const Dataset& test, std::size_t k, const DistanceMeasure& dist,
                       bool impute = false, std::size_t threads = 0);

/// Fills each missing entry with the inverse-distance-weighted mean of the k
/// nearest donors observed at that position, distances being masked
/// Euclidean over originally observed entries. With `same_set`, target and
/// donors are the same dataset and an instance never donates to itself.
Dataset knn_impute(const Dataset& target, const Dataset& donors, std::size_t k, bool same_set,
                   std::size_t threads = 0);

double accuracy(std::span<const double> truth, std::span<const double> pred);
double r2_score(std::span<const double> truth, std::span<const double> pred);

/// One von Mises-Fisher draw on S^2 (Wood's rejection sampler).
std::array<double, 3> sample_vmf(const std::array<double, 3>& mean, double kappa, Rng& rng);

/// Two classes of unit vectors in R^3. Both class means lie `separation`
/// radians apart under a random rotation; each class is a vMF cloud.
Dataset sample_vmf_clusters(std::size_t n_per_class, double kappa, std::uint64_t seed, double separation = 1.0);

/// Isotropic Gaussian blobs with centers drawn uniformly from [-10, 10]^dims.
Dataset make_blobs(std::size_t n, std::size_t classes, std::size_t dims, double spread, std::uint64_t seed);

/// Euclidean nearest-centroid classifier over equal-shape grids.
class NearestCentroid {
 public:
  void fit(const Dataset& d);
  int predict(const Instance& x) const;
  std::vector<double> predict(const Dataset& d) const;

 private:
  std::vector<std::vector<double>> centroids_;
};

/// A required dataset file is absent; the message says how to fetch it.
class MissingDatasetError : public DataError {
 public:
  explicit MissingDatasetError(const std::string& what) : DataError(what) {}
};

struct BenchOptions {
  std::vector<std::uint64_t> seeds;  // empty: the experiment's default seeds
  std::filesystem::path data_dir = "data";
  std::size_t threads = 0;
  std::map<std::string, std::string> params;  // experiment-specific overrides
};

struct BenchReport {
  std::string experiment;
  std::vector<std::string> columns;         // per-seed table header
  std::vector<std::vector<double>> rows;    // per-seed values, first column is the seed
  std::map<std::string, double> summary;    // aggregates
  std::map<std::string, std::string> setup;  // protocol parameters actually used
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
  /// Writes report.json and table.csv into `dir`.
  void write(const std::filesystem::path& dir) const;
};

std::vector<std::string> experiment_names();
BenchReport run_experiment(const std::string& name, const BenchOptions& options);

}  // namespace proxforest

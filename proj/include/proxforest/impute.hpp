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

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "proxforest/dataset.hpp"
#include "proxforest/forest.hpp"
#include "proxforest/gap.hpp"

namespace proxforest {

enum class InitMethod { mean, median, knn, linear };
enum class ImputeMetric { r2, rmse, mae, f1, accuracy };

std::string_view to_string(InitMethod m);
std::string_view to_string(ImputeMetric m);
InitMethod parse_init_method(std::string_view s);
ImputeMetric parse_impute_metric(std::string_view s);

/// True for rmse and mae.
bool lower_is_better(ImputeMetric m);
bool is_categorical_metric(ImputeMetric m);

struct ImputeConfig {
  InitMethod init = InitMethod::mean;
  std::size_t iterations = 5;
  /// Scores continuous features; when every feature is categorical it may be
  /// f1 or accuracy and then scores those instead of `categorical_metric`.
  ImputeMetric metric = ImputeMetric::r2;
  ImputeMetric categorical_metric = ImputeMetric::f1;
  std::size_t knn_k = 5;
  bool condition_on_label = false;  // mean/median init within label groups (training only)
  std::size_t threads = 0;

  /// Throws ConfigError when a setting does not fit the dataset.
  void validate(const Dataset& d) const;
};

/// Fills every unfilled entry of `d`. Statistics and donors come from
/// `reference` when given (test data initialized from training data) and from
/// `d` itself otherwise. The missing mask is kept.
Dataset initialize(const Dataset& d, const ImputeConfig& cfg, const Dataset* reference = nullptr);

struct IterationRecord {
  std::size_t iteration = 0;
  double score = 0.0;                 // NaN when undefined; such iterations are never selected
  std::vector<double> feature_scores;  // NaN for features without scored entries
  std::size_t imputed_entries = 0;
  std::size_t pseudo_entries = 0;
  std::size_t fallbacks = 0;        // entries left at their initial value
  std::size_t hull_violations = 0;  // continuous imputations outside their donors' range
  std::size_t uncovered_rows = 0;
};

struct ImputationReport {
  std::vector<IterationRecord> iterations;
  std::size_t selected = 0;
  ImputeMetric selection_metric = ImputeMetric::r2;
  Dataset imputed;
  /// Forest whose proximities produced the selected imputation.
  std::shared_ptr<const Forest> forest;
};

ImputationReport gap_impute_train(const Dataset& d, const ForestConfig& forest_cfg, const ImputeConfig& cfg,
                                  const FitOptions& options = {});

struct TestImputation {
  Dataset initialized;
  Dataset imputed;
  std::size_t imputed_entries = 0;
  std::size_t fallbacks = 0;
  std::size_t hull_violations = 0;
};

/// Initializes `test` from `train` statistics (labels unused), then replaces
/// each missing entry by the test-to-train proximity-weighted average of the
/// observed training values at that position. Every series in `train` and
/// `test` must share one length.
TestImputation gap_impute_test(const Dataset& train, const Dataset& test, const Forest& forest,
                               const ImputeConfig& cfg);

/// R^2 (NaN when the truth is constant), RMSE, MAE, macro F1 or accuracy.
/// NaN for empty input.
double internal_score(std::span<const double> truth, std::span<const double> imputed, ImputeMetric metric);

/// One proximity-weighted pass: rows of `gap` index `target`, columns index
/// `donors`. Missing entries of `target` are imputed, or copied from
/// `fallback` when no donor is observed there; with `pseudo`, observed entries
/// are re-imputed and only scored. Exposed for tests.
struct PassResult {
  Dataset imputed;
  std::size_t imputed_entries = 0;
  std::size_t fallbacks = 0;
  std::size_t hull_violations = 0;
  std::size_t pseudo_entries = 0;
  std::vector<std::vector<double>> pseudo_truth;  // per feature
  std::vector<std::vector<double>> pseudo_pred;
};

PassResult gap_pass(const GapMatrix& gap, const Dataset& donors, const Dataset& target, const Dataset& fallback,
                    bool pseudo, std::size_t threads = 0);

}  // namespace proxforest

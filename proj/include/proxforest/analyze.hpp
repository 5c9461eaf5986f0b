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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "proxforest/dataset.hpp"
#include "proxforest/gap.hpp"
#include "proxforest/matrix.hpp"

namespace proxforest {

struct OutlierRecord {
  std::size_t index = 0;  // training index
  int label = 0;
  double raw = 0.0;         // +inf when no within-class proximity is positive
  double normalized = 0.0;  // equals raw when the class is too small to normalize
  bool normalized_valid = true;
  bool flagged = false;
};

struct OutlierReport {
  std::vector<OutlierRecord> records;  // covered training instances, ascending index
  std::size_t top_q = 3;
};

/// raw(i) = 1 / sum over same-class j != i of p_sym(i,j)^2; normalized per
/// class as (raw - median) / MAD clamped at 0 (MAD taken as 1 when it is 0).
/// The top_q normalized scores of each class are flagged, as is every
/// infinite score. Classes with fewer than 3 covered members keep raw scores.
OutlierReport outlier_scores(const GapMatrix& oob, std::span<const int> labels, std::size_t top_q = 3);

struct MdsResult {
  Matrix coordinates;  // rows x dims
  std::vector<double> eigenvalues;
  std::vector<bool> converged;
  std::vector<std::string> warnings;
};

/// Classical (Torgerson) MDS via power iteration with deflation.
MdsResult classical_mds(const Matrix& dissimilarity, std::size_t dims);

/// Double-centered Gram matrix -1/2 J D^2 J.
Matrix double_center(const Matrix& dissimilarity);

void write_outliers(const OutlierReport& r, const Dataset& train, const std::filesystem::path& path);
void write_embedding(const MdsResult& m, const std::vector<std::string>& ids, const std::filesystem::path& path);

}  // namespace proxforest

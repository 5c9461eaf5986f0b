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
#include <cstdint>
#include <filesystem>
#include <vector>

#include "proxforest/dataset.hpp"
#include "proxforest/forest.hpp"
#include "proxforest/matrix.hpp"

namespace proxforest {

enum class GapKind { oob, test };

/// One proximity row: training columns (ascending) with positive weights.
struct GapRow {
  std::size_t row = 0;  // training index (oob) or test index (test)
  std::vector<std::uint32_t> columns;
  std::vector<double> values;

  double sum() const;
};

/// Sparse row-indexed proximities. Rows whose out-of-bag tree set is empty
/// are left out and listed in `uncovered`.
struct GapMatrix {
  GapKind kind = GapKind::oob;
  std::size_t row_count = 0;     // instances considered
  std::size_t column_count = 0;  // training instances
  std::vector<GapRow> rows;      // ascending by row
  std::vector<std::size_t> uncovered;

  /// Row for instance `row`, or nullptr when it was not emitted.
  const GapRow* find(std::size_t row) const;
};

/// p(i, j) = 1/|S_i| * sum over t in S_i of [j shares i's leaf in t] * c_j(t) / |M_i(t)|,
/// with S_i the trees where i is out of bag.
GapMatrix compute_oob_proximities(const Forest& forest, std::size_t threads = 0);

/// Same formula with every tree counted for each test instance.
GapMatrix compute_test_proximities(const Forest& forest, const Dataset& test, std::size_t threads = 0);

/// Per emitted row: argmax_c sum_j p(i,j) [y_j = c] (lowest class on ties) or
/// sum_j p(i,j) y_j.
std::vector<double> proximity_weighted_prediction(const GapMatrix& gap, const Dataset& train);

/// Symmetrized OOB proximities over the covered rows and the dissimilarity
/// sqrt(1 - p_sym) with a zero diagonal.
struct Dissimilarity {
  std::vector<std::size_t> indices;  // training index of each row/column
  Matrix proximity;
  Matrix distance;
};

Dissimilarity symmetrize_and_dissimilarity(const GapMatrix& gap);

/// `row,col,value` CSV with instance ids, one line per nonzero.
void write_triplets(const GapMatrix& gap, const Dataset& rows, const Dataset& columns,
                    const std::filesystem::path& path);
/// Dense CSV `id,<column ids...>`; refuses more than kDenseLimit columns.
void write_dense(const GapMatrix& gap, const Dataset& rows, const Dataset& columns,
                 const std::filesystem::path& path);
/// Square CSV `id,<ids...>`.
void write_matrix(const Matrix& m, const std::vector<std::string>& ids, const std::filesystem::path& path);

inline constexpr std::size_t kDenseLimit = 2000;

}  // namespace proxforest

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
#include "proxforest/gap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "proxforest/csv.hpp"
#include "proxforest/error.hpp"
#include "proxforest/parallel.hpp"

namespace proxforest {
namespace {

/// Dense accumulator that remembers which columns it touched.
class RowBuilder {
 public:
  explicit RowBuilder(std::size_t n) : acc_(n, 0.0) {}

  void add_leaf(const TreeNode& leaf) {
    const double total = leaf.total;
    for (std::size_t k = 0; k < leaf.members.size(); ++k) {
      const std::uint32_t j = leaf.members[k];
      if (acc_[j] == 0.0) touched_.push_back(j);
      acc_[j] += leaf.counts[k] / total;
    }
  }

  GapRow take(std::size_t row, std::size_t trees) {
    std::sort(touched_.begin(), touched_.end());
    GapRow r;
    r.row = row;
    r.columns = touched_;
    r.values.reserve(touched_.size());
    for (std::uint32_t j : touched_) {
      r.values.push_back(acc_[j] / static_cast<double>(trees));
      acc_[j] = 0.0;
    }
    touched_.clear();
    return r;
  }

 private:
  std::vector<double> acc_;
  std::vector<std::uint32_t> touched_;
};

void write_header(std::ostream& out, const std::vector<std::string>& fields) { csv::write_row(out, fields); }

}  // namespace

double GapRow::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

const GapRow* GapMatrix::find(std::size_t row) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), row, [](const GapRow& r, std::size_t v) { return r.row < v; });
  return it != rows.end() && it->row == row ? &*it : nullptr;
}

GapMatrix compute_oob_proximities(const Forest& forest, std::size_t threads) {
  const std::size_t n = forest.training().size();
  const auto& trees = forest.trees();
  GapMatrix gap;
  gap.kind = GapKind::oob;
  gap.row_count = n;
  gap.column_count = n;
  std::vector<GapRow> rows(n);
  std::vector<char> covered(n, 0);
  const std::size_t workers = threads == 0 ? default_thread_count() : threads;
  const std::size_t chunk = (n + workers - 1) / std::max<std::size_t>(workers, 1);
  parallel_for(workers, workers, [&](std::size_t w) {
    RowBuilder builder(n);
    for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) {
      std::size_t s = 0;
      for (const auto& tree : trees) {
        if (tree.in_bag(i)) continue;
        ++s;
        builder.add_leaf(tree.nodes[tree.leaf_of[i]]);
      }
      if (s == 0) continue;
      rows[i] = builder.take(i, s);
      covered[i] = 1;
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (covered[i]) {
      gap.rows.push_back(std::move(rows[i]));
    } else {
      gap.uncovered.push_back(i);
    }
  }
  return gap;
}

GapMatrix compute_test_proximities(const Forest& forest, const Dataset& test, std::size_t threads) {
  if (test.size() > 0 && test.kind != forest.training().kind) {
    throw DataError("test payload kind differs from the training data");
  }
  const std::size_t n = forest.training().size();
  const auto& trees = forest.trees();
  GapMatrix gap;
  gap.kind = GapKind::test;
  gap.row_count = test.size();
  gap.column_count = n;
  gap.rows.resize(test.size());
  const std::size_t workers = std::max<std::size_t>(1, threads == 0 ? default_thread_count() : threads);
  const std::size_t chunk = (test.size() + workers - 1) / workers;
  parallel_for(workers, workers, [&](std::size_t w) {
    RowBuilder builder(n);
    for (std::size_t i = w * chunk; i < std::min(test.size(), (w + 1) * chunk); ++i) {
      for (std::size_t t = 0; t < trees.size(); ++t) {
        builder.add_leaf(trees[t].nodes[forest.route(t, test.instances[i])]);
      }
      gap.rows[i] = builder.take(i, trees.size());
    }
  });
  return gap;
}

std::vector<double> proximity_weighted_prediction(const GapMatrix& gap, const Dataset& train) {
  std::vector<double> out;
  out.reserve(gap.rows.size());
  std::vector<double> scores;
  for (const auto& r : gap.rows) {
    if (train.task == Task::classification) {
      scores.assign(train.class_count(), 0.0);
      for (std::size_t k = 0; k < r.columns.size(); ++k) {
        scores[static_cast<std::size_t>(train.labels[r.columns[k]])] += r.values[k];
      }
      out.push_back(static_cast<double>(vote_argmax(scores)));
    } else {
      double s = 0.0;
      for (std::size_t k = 0; k < r.columns.size(); ++k) s += r.values[k] * train.responses[r.columns[k]];
      out.push_back(s);
    }
  }
  return out;
}

Dissimilarity symmetrize_and_dissimilarity(const GapMatrix& gap) {
  if (gap.kind != GapKind::oob) throw DataError("dissimilarities need an out-of-bag proximity matrix");
  Dissimilarity out;
  std::vector<std::size_t> position(gap.column_count, gap.column_count);
  for (const auto& r : gap.rows) {
    position[r.row] = out.indices.size();
    out.indices.push_back(r.row);
  }
  const std::size_t m = out.indices.size();
  Matrix p(m, m);
  for (std::size_t a = 0; a < m; ++a) {
    const GapRow& r = gap.rows[a];
    for (std::size_t k = 0; k < r.columns.size(); ++k) {
      const std::size_t b = position[r.columns[k]];
      if (b == gap.column_count) continue;
      p(a, b) += 0.5 * r.values[k];
      p(b, a) += 0.5 * r.values[k];
    }
  }
  Matrix d(m, m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      p(a, b) = std::clamp(p(a, b), 0.0, 1.0);
      d(a, b) = a == b ? 0.0 : std::sqrt(1.0 - p(a, b));
    }
  }
  out.proximity = std::move(p);
  out.distance = std::move(d);
  return out;
}

void write_triplets(const GapMatrix& gap, const Dataset& rows, const Dataset& columns,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_header(out, {"row", "col", "value"});
  for (const auto& r : gap.rows) {
    for (std::size_t k = 0; k < r.columns.size(); ++k) {
      csv::write_row(out, {rows.instances[r.row].id, columns.instances[r.columns[k]].id, csv::format_double(r.values[k])});
    }
  }
}

void write_dense(const GapMatrix& gap, const Dataset& rows, const Dataset& columns, const std::filesystem::path& path) {
  if (gap.column_count > kDenseLimit) {
    throw DataError("dense proximity export is limited to " + std::to_string(kDenseLimit) + " columns; use triplets");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::string> fields{"id"};
  for (const auto& x : columns.instances) fields.push_back(x.id);
  write_header(out, fields);
  std::vector<double> dense(gap.column_count);
  for (const auto& r : gap.rows) {
    std::fill(dense.begin(), dense.end(), 0.0);
    for (std::size_t k = 0; k < r.columns.size(); ++k) dense[r.columns[k]] = r.values[k];
    fields.assign(1, rows.instances[r.row].id);
    for (double v : dense) fields.push_back(csv::format_double(v));
    csv::write_row(out, fields);
  }
}

void write_matrix(const Matrix& m, const std::vector<std::string>& ids, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::string> fields{"id"};
  fields.insert(fields.end(), ids.begin(), ids.end());
  write_header(out, fields);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    fields.assign(1, ids[i]);
    for (std::size_t j = 0; j < m.cols(); ++j) fields.push_back(csv::format_double(m(i, j)));
    csv::write_row(out, fields);
  }
}

}  // namespace proxforest

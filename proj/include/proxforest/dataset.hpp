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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace proxforest {

enum class Task { classification, regression };
enum class PayloadKind { vector, series, graph };

std::string_view to_string(Task task);
std::string_view to_string(PayloadKind kind);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Channel-major grid of reals: a vector is `channels` x 1, a series is
/// `channels` x `length`. A NaN value marks a missing entry that has not been
/// filled. `missing` is the original mask and survives imputation, so the
/// missing/observed index sets stay available after values are filled in.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t channels, std::size_t length);
  Grid(std::size_t channels, std::size_t length, std::vector<double> values);

  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> channel(std::size_t j) const {
    return std::span<const double>(values_).subspan(j * length_, length_);
  }

  double at(std::size_t j, std::size_t t) const { return values_[j * length_ + t]; }
  double& at(std::size_t j, std::size_t t) { return values_[j * length_ + t]; }

  bool is_missing(std::size_t j, std::size_t t) const {
    return !missing_.empty() && missing_[j * length_ + t] != 0;
  }
  bool has_missing() const;
  std::size_t missing_count() const;
  /// True when some value is still NaN.
  bool has_unfilled() const;

  /// Marks (j, t) missing and clears its value.
  void mark_missing(std::size_t j, std::size_t t);
  /// Restores (j, t) as observed with the given value.
  void mark_observed(std::size_t j, std::size_t t, double value);

  /// M_nj: positions missing in channel j.
  std::vector<std::size_t> missing_positions(std::size_t j) const;
  /// O_nj: positions observed in channel j.
  std::vector<std::size_t> observed_positions(std::size_t j) const;

  friend bool operator==(const Grid& a, const Grid& b);

 private:
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> missing_;  // empty means nothing missing
};

/// Undirected labeled graph. Edges are stored once as (u, v) with u < v,
/// sorted and deduplicated; self loops are dropped.
class Graph {
 public:
  Graph() = default;
  Graph(std::vector<std::int64_t> node_labels,
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges);

  std::size_t node_count() const { return labels_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const std::int64_t> labels() const { return labels_; }
  std::span<const std::pair<std::uint32_t, std::uint32_t>> edges() const { return edges_; }
  std::span<const std::uint32_t> neighbors(std::size_t v) const {
    return std::span<const std::uint32_t>(adjacency_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.labels_ == b.labels_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<std::int64_t> labels_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> adjacency_;
};

struct Instance {
  std::string id;
  std::variant<Grid, Graph> payload;

  bool is_graph() const { return std::holds_alternative<Graph>(payload); }
  const Grid& grid() const { return std::get<Grid>(payload); }
  Grid& grid() { return std::get<Grid>(payload); }
  const Graph& graph() const { return std::get<Graph>(payload); }

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Targets are stored by task: class indices into `class_names`, or reals.
/// Class names are fixed at load and ordered (numerically when every name is
/// a number); "lowest label" tie-breaks refer to this order.
struct Dataset {
  Task task = Task::classification;
  PayloadKind kind = PayloadKind::vector;
  std::vector<Instance> instances;
  std::vector<int> labels;
  std::vector<double> responses;
  std::vector<std::string> class_names;

  std::vector<std::string> feature_names;  // columns (vector) or channels (series)
  std::vector<bool> categorical;           // per feature; codes stored as reals
  std::string label_name = "label";
  std::size_t label_column = 0;  // CSV position of the label, for round trips
  std::string id_name;           // CSV id column, written first; empty when ids are row numbers

  std::size_t size() const { return instances.size(); }
  std::size_t class_count() const { return class_names.size(); }
  std::size_t feature_count() const { return feature_names.size(); }

  /// Target of instance i as a real (class index for classification).
  double target(std::size_t i) const {
    return task == Task::classification ? static_cast<double>(labels[i]) : responses[i];
  }

  Dataset subset(std::span<const std::size_t> indices) const;
  /// Copy with no instances but the same schema.
  Dataset empty_like() const;
  std::size_t missing_count() const;
};

/// Checks the structural invariants: homogeneous kind and channel count,
/// targets aligned with instances, mask shape, finite observed values, valid
/// graph edges. Throws DataError.
void validate(const Dataset& d);

struct CsvOptions {
  std::string label_column;
  Task task = Task::classification;
  std::optional<std::string> id_column;
  std::vector<std::string> categorical_columns;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);
Dataset load_series_jsonl(const std::filesystem::path& path, Task task = Task::classification);
Dataset load_graph_jsonl(const std::filesystem::path& path, Task task = Task::classification);

/// Dispatches on extension (.csv) or on the first JSONL record's keys.
Dataset load_dataset(const std::filesystem::path& path, const CsvOptions& options);

/// Writers emit the format the dataset was loaded from. Missing (unfilled)
/// cells are written as empty CSV cells / JSON nulls.
void write_csv(const Dataset& d, const std::filesystem::path& path);
void write_series_jsonl(const Dataset& d, const std::filesystem::path& path);
void write_graph_jsonl(const Dataset& d, const std::filesystem::path& path);
void write_dataset(const Dataset& d, const std::filesystem::path& path);

/// Masks exactly floor(fraction * observed entries) observed entries, chosen
/// uniformly without replacement, while keeping at least one observed entry
/// per instance.
Dataset inject_mcar(const Dataset& d, double fraction, std::uint64_t seed);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Test size is floor(test_fraction * N). Stratified splits allot each class
/// floor(test_fraction * n_c) and hand the remainder to the classes with the
/// largest fractional parts. Singleton classes stay in train with a warning.
Split train_test_split(const Dataset& d, double test_fraction, bool stratify, std::uint64_t seed);

/// Re-indexes class labels against `class_names` (a model's training
/// classes). Throws DataError for a label outside that set.
void align_labels(Dataset& d, const std::vector<std::string>& class_names);

/// Z-scores every feature channel with statistics from `fit_on`, ignoring
/// missing entries. Categorical features are left as is.
void standardize(Dataset& d, const Dataset& fit_on);

}  // namespace proxforest

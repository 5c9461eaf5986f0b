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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proxforest/dataset.hpp"
#include "proxforest/distance.hpp"

namespace proxforest {

enum class DistanceChoice { per_node, per_tree };
enum class Purity { gini, variance, mad };

std::string_view to_string(DistanceChoice c);
std::string_view to_string(Purity p);
DistanceChoice parse_distance_choice(std::string_view s);
Purity parse_purity(std::string_view s);

struct ForestConfig {
  std::size_t n_trees = 11;
  std::size_t candidates = 5;  // r: candidate splits tried per node
  std::vector<DistanceSpec> distances;
  DistanceChoice distance_choice = DistanceChoice::per_node;
  Task task = Task::classification;
  Purity purity = Purity::gini;
  std::optional<std::size_t> max_depth;  // root has depth 0
  std::size_t min_leaf = 1;              // nodes with fewer in-bag draws become leaves
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

enum class LeafReason { pure, min_leaf, max_depth, no_progress };
std::string_view to_string(LeafReason r);

struct TreeNode {
  std::uint32_t depth = 0;

  // Internal nodes: children[k] holds the instances nearest to exemplars[k].
  std::uint32_t distance = 0;  // index into the forest's distance list
  std::vector<std::uint32_t> exemplars;
  std::vector<std::uint32_t> children;

  // Leaves: distinct in-bag members (ascending) with their bootstrap counts.
  LeafReason reason = LeafReason::pure;
  std::vector<std::uint32_t> members;
  std::vector<std::uint32_t> counts;
  std::uint32_t total = 0;           // |M|: sum of counts
  std::vector<double> class_weight;  // classification: in-bag count per class
  double mean = 0.0;                 // regression: in-bag target mean

  bool is_leaf() const { return children.empty(); }
};

struct Tree {
  std::vector<TreeNode> nodes;              // nodes[0] is the root
  std::vector<std::uint32_t> multiplicity;  // c_j(t) for every training j
  std::vector<std::uint32_t> leaf_of;       // leaf reached by every training j

  bool in_bag(std::size_t j) const { return multiplicity[j] > 0; }
  std::uint32_t depth() const;
  std::size_t leaf_count() const;
};

/// Counters filled by route().
struct RouteStats {
  std::size_t distance_evaluations = 0;
  std::size_t rounds = 0;
};

struct FitOptions {
  std::size_t threads = 0;  // 0: default_thread_count()
  bool log_trees = false;   // one info line per tree
};

/// Out-of-bag aggregate for every training instance.
struct OobPrediction {
  std::vector<double> values;               // class index or regression value
  std::vector<bool> covered;                // false when no tree has i out of bag
  std::vector<std::vector<double>> scores;  // classification: mean leaf class proportions
};

/// Absolute tolerance used when comparing vote scores; scores closer than
/// this count as tied and the lowest class wins.
inline constexpr double kScoreTieTolerance = 1e-9;

/// Index of the largest score, lowest index among near-ties.
std::size_t vote_argmax(std::span<const double> scores);

class Forest {
 public:
  /// Grows cfg.n_trees trees on bootstrap resamples of `train`.
  static Forest fit(Dataset train, ForestConfig cfg, const FitOptions& options = {});

  const ForestConfig& config() const { return cfg_; }
  const Dataset& training() const { return *train_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const DistanceMeasure& distance(std::size_t k) const { return *distances_[k]; }

  /// Leaf node index reached by x in tree t.
  std::uint32_t route(std::size_t t, const Instance& x, RouteStats* stats = nullptr) const;

  /// Classification: mean over trees of the reached leaves' in-bag class
  /// proportions. Predicted label = vote_argmax of these scores.
  std::vector<double> class_scores(const Instance& x, RouteStats* stats = nullptr) const;

  /// Class index (classification) or mean of leaf means (regression).
  double predict(const Instance& x, RouteStats* stats = nullptr) const;
  std::vector<double> predict(const Dataset& d, std::size_t threads = 0) const;

  OobPrediction predict_oob() const;

  /// Model file: a JSON header line with format, version and the SHA-256 of
  /// the payload, then the JSON payload line.
  void save(const std::filesystem::path& path) const;
  static Forest load(const std::filesystem::path& path);
  std::string serialize() const;
  static Forest deserialize(const std::string& text);

  static constexpr const char* kFormat = "proxforest-model";
  static constexpr int kVersionMajor = 1;
  static constexpr int kVersionMinor = 0;

 private:
  friend struct ForestAccess;
  Forest() = default;
  void resolve_distances();
  void finish_leaf_index();

  ForestConfig cfg_;
  std::shared_ptr<const Dataset> train_;
  std::vector<DistancePtr> distances_;
  std::vector<Tree> trees_;
};

/// Fills the aggregate fields of a leaf (total, class weights or mean) from
/// its members and counts.
void summarize_leaf(TreeNode& leaf, const Dataset& train);

}  // namespace proxforest

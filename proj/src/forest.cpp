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
#include "proxforest/forest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "proxforest/error.hpp"
#include "proxforest/log.hpp"
#include "proxforest/parallel.hpp"
#include "proxforest/random.hpp"

namespace proxforest {
namespace {

constexpr std::uint32_t kNoLeaf = std::numeric_limits<std::uint32_t>::max();

struct Member {
  std::uint32_t index;
  std::uint32_t count;
};

double weight_of(std::span<const Member> m) {
  double w = 0.0;
  for (const auto& x : m) w += x.count;
  return w;
}

double gini(const Dataset& d, std::span<const Member> m, std::vector<double>& scratch) {
  scratch.assign(d.class_count(), 0.0);
  double total = 0.0;
  for (const auto& x : m) {
    scratch[static_cast<std::size_t>(d.labels[x.index])] += x.count;
    total += x.count;
  }
  double s = 0.0;
  for (double w : scratch) s += (w / total) * (w / total);
  return 1.0 - s;
}

double variance(const Dataset& d, std::span<const Member> m) {
  double total = 0.0;
  double sum = 0.0;
  for (const auto& x : m) {
    total += x.count;
    sum += x.count * d.responses[x.index];
  }
  const double mean = sum / total;
  double ss = 0.0;
  for (const auto& x : m) ss += x.count * (d.responses[x.index] - mean) * (d.responses[x.index] - mean);
  return ss / total;
}

/// Mean absolute deviation about the lower weighted median.
double mad(const Dataset& d, std::span<const Member> m, std::vector<std::pair<double, double>>& scratch) {
  scratch.clear();
  double total = 0.0;
  for (const auto& x : m) {
    scratch.emplace_back(d.responses[x.index], x.count);
    total += x.count;
  }
  std::sort(scratch.begin(), scratch.end());
  double cum = 0.0;
  double median = scratch.back().first;
  for (const auto& [y, w] : scratch) {
    cum += w;
    if (2.0 * cum >= total) {
      median = y;
      break;
    }
  }
  double s = 0.0;
  for (const auto& [y, w] : scratch) s += w * std::abs(y - median);
  return s / total;
}

bool single_target(const Dataset& d, std::span<const Member> m) {
  for (const auto& x : m) {
    if (d.task == Task::classification ? d.labels[x.index] != d.labels[m[0].index]
                                       : d.responses[x.index] != d.responses[m[0].index]) {
      return false;
    }
  }
  return true;
}

struct Candidate {
  std::uint32_t distance = 0;
  std::vector<std::uint32_t> exemplars;        // only those with nonempty branches
  std::vector<std::vector<Member>> branches;
  double score = std::numeric_limits<double>::infinity();
};

class Grower {
 public:
  Grower(const Dataset& d, const ForestConfig& cfg, const std::vector<DistancePtr>& distances, Rng& rng,
         std::optional<std::uint32_t> tree_distance)
      : d_(d), cfg_(cfg), distances_(distances), rng_(rng), tree_distance_(tree_distance) {}

  void grow(Tree& tree, std::vector<Member> root) {
    struct Pending {
      std::uint32_t node;
      std::vector<Member> members;
    };
    tree.nodes.assign(1, TreeNode{});
    std::vector<Pending> stack;
    stack.push_back({0, std::move(root)});
    while (!stack.empty()) {
      Pending p = std::move(stack.back());
      stack.pop_back();
      const std::uint32_t depth = tree.nodes[p.node].depth;

      std::optional<LeafReason> stop;
      if (single_target(d_, p.members)) {
        stop = LeafReason::pure;
      } else if (weight_of(p.members) < static_cast<double>(cfg_.min_leaf)) {
        stop = LeafReason::min_leaf;
      } else if (cfg_.max_depth && depth >= *cfg_.max_depth) {
        stop = LeafReason::max_depth;
      }
      std::optional<Candidate> best;
      if (!stop) {
        best = best_candidate(p.members);
        if (!best) {
          stop = LeafReason::no_progress;
        } else if (d_.task == Task::regression && best->score >= impurity(p.members)) {
          stop = LeafReason::no_progress;
        }
      }
      if (stop) {
        make_leaf(tree.nodes[p.node], p.members, *stop);
        continue;
      }
      const auto first_child = static_cast<std::uint32_t>(tree.nodes.size());
      const std::size_t k = best->exemplars.size();
      for (std::size_t b = 0; b < k; ++b) {
        TreeNode child;
        child.depth = depth + 1;
        tree.nodes.push_back(std::move(child));
      }
      TreeNode& node = tree.nodes[p.node];
      node.distance = best->distance;
      node.exemplars = std::move(best->exemplars);
      node.children.resize(k);
      std::iota(node.children.begin(), node.children.end(), first_child);
      for (std::size_t b = k; b-- > 0;) {
        stack.push_back({first_child + static_cast<std::uint32_t>(b), std::move(best->branches[b])});
      }
    }
  }

 private:
  double impurity(std::span<const Member> m) {
    switch (cfg_.purity) {
      case Purity::gini:
        return gini(d_, m, class_scratch_);
      case Purity::variance:
        return variance(d_, m);
      case Purity::mad:
        return mad(d_, m, value_scratch_);
    }
    return 0.0;
  }

  void make_leaf(TreeNode& node, std::span<const Member> m, LeafReason reason) {
    node.reason = reason;
    std::vector<Member> sorted(m.begin(), m.end());
    std::sort(sorted.begin(), sorted.end(), [](const Member& a, const Member& b) { return a.index < b.index; });
    for (const auto& x : sorted) {
      node.members.push_back(x.index);
      node.counts.push_back(x.count);
    }
    summarize_leaf(node, d_);
  }

  std::vector<std::uint32_t> draw_exemplars(std::span<const Member> m) {
    std::vector<std::uint32_t> ex;
    if (d_.task == Task::classification) {
      std::vector<std::vector<std::uint32_t>> by_class(d_.class_count());
      for (const auto& x : m) by_class[static_cast<std::size_t>(d_.labels[x.index])].push_back(x.index);
      for (const auto& ids : by_class) {
        if (!ids.empty()) ex.push_back(ids[uniform_index(rng_, ids.size())]);
      }
    } else {
      const std::size_t a = uniform_index(rng_, m.size());
      std::size_t b = uniform_index(rng_, m.size() - 1);
      if (b >= a) ++b;
      ex = {m[a].index, m[b].index};
    }
    return ex;
  }

  std::optional<Candidate> best_candidate(std::span<const Member> m) {
    std::optional<Candidate> best;
    const double total = weight_of(m);
    for (std::size_t r = 0; r < cfg_.candidates; ++r) {
      Candidate c;
      c.distance = tree_distance_ ? *tree_distance_ : static_cast<std::uint32_t>(uniform_index(rng_, distances_.size()));
      const std::vector<std::uint32_t> ex = draw_exemplars(m);
      const DistanceMeasure& dist = *distances_[c.distance];
      std::vector<std::vector<Member>> branches(ex.size());
      for (const auto& x : m) {
        const Instance& xi = d_.instances[x.index];
        std::size_t arg = 0;
        double lo = dist(xi, d_.instances[ex[0]]);
        for (std::size_t k = 1; k < ex.size(); ++k) {
          const double v = dist(xi, d_.instances[ex[k]]);
          if (v < lo) {
            lo = v;
            arg = k;
          }
        }
        branches[arg].push_back(x);
      }
      double score = 0.0;
      for (std::size_t k = 0; k < ex.size(); ++k) {
        if (branches[k].empty()) continue;
        c.exemplars.push_back(ex[k]);
        score += weight_of(branches[k]) / total * impurity(branches[k]);
        c.branches.push_back(std::move(branches[k]));
      }
      if (c.exemplars.size() < 2) continue;
      c.score = score;
      if (!best || c.score < best->score) best = std::move(c);
    }
    return best;
  }

  const Dataset& d_;
  const ForestConfig& cfg_;
  const std::vector<DistancePtr>& distances_;
  Rng& rng_;
  std::optional<std::uint32_t> tree_distance_;
  std::vector<double> class_scratch_;
  std::vector<std::pair<double, double>> value_scratch_;
};

}  // namespace

std::string_view to_string(DistanceChoice c) { return c == DistanceChoice::per_node ? "per_node" : "per_tree"; }

std::string_view to_string(Purity p) {
  switch (p) {
    case Purity::gini:
      return "gini";
    case Purity::variance:
      return "variance";
    case Purity::mad:
      return "mad";
  }
  return "?";
}

std::string_view to_string(LeafReason r) {
  switch (r) {
    case LeafReason::pure:
      return "pure";
    case LeafReason::min_leaf:
      return "min_leaf";
    case LeafReason::max_depth:
      return "max_depth";
    case LeafReason::no_progress:
      return "no_progress";
  }
  return "?";
}

DistanceChoice parse_distance_choice(std::string_view s) {
  if (s == "per_node" || s == "node") return DistanceChoice::per_node;
  if (s == "per_tree" || s == "tree") return DistanceChoice::per_tree;
  throw ConfigError("distance choice must be per_node or per_tree, got '" + std::string(s) + "'");
}

Purity parse_purity(std::string_view s) {
  if (s == "gini") return Purity::gini;
  if (s == "variance") return Purity::variance;
  if (s == "mad") return Purity::mad;
  throw ConfigError("purity must be gini, variance or mad, got '" + std::string(s) + "'");
}

void ForestConfig::validate() const {
  if (n_trees < 1) throw ConfigError("n_trees must be at least 1");
  if (candidates < 1) throw ConfigError("r (candidate splits) must be at least 1");
  if (distances.empty()) throw ConfigError("at least one distance is required");
  if (min_leaf < 1) throw ConfigError("min_leaf must be at least 1");
  if (task == Task::classification && purity != Purity::gini) {
    throw ConfigError("classification forests use gini purity");
  }
  if (task == Task::regression && purity == Purity::gini) {
    throw ConfigError("regression forests use variance or mad purity");
  }
}

std::uint32_t Tree::depth() const {
  std::uint32_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t vote_argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best] + kScoreTieTolerance) best = c;
  }
  return best;
}

void summarize_leaf(TreeNode& leaf, const Dataset& train) {
  leaf.total = 0;
  leaf.class_weight.clear();
  leaf.mean = 0.0;
  if (train.task == Task::classification) leaf.class_weight.assign(train.class_count(), 0.0);
  double sum = 0.0;
  for (std::size_t k = 0; k < leaf.members.size(); ++k) {
    const std::uint32_t j = leaf.members[k];
    leaf.total += leaf.counts[k];
    if (train.task == Task::classification) {
      leaf.class_weight[static_cast<std::size_t>(train.labels[j])] += leaf.counts[k];
    } else {
      sum += leaf.counts[k] * train.responses[j];
    }
  }
  if (train.task == Task::regression && leaf.total > 0) leaf.mean = sum / leaf.total;
}

void Forest::resolve_distances() {
  distances_.clear();
  for (const auto& spec : cfg_.distances) {
    if (!DistanceRegistry::global().supports(spec.name, train_->kind)) {
      throw ConfigError("distance '" + spec.name + "' does not support " + std::string(to_string(train_->kind)) +
                        " payloads");
    }
    distances_.push_back(registry_resolve(spec));
  }
}

void Forest::finish_leaf_index() {
  const std::size_t n = train_->size();
  for (auto& tree : trees_) {
    tree.leaf_of.assign(n, kNoLeaf);
    for (std::uint32_t node = 0; node < tree.nodes.size(); ++node) {
      for (std::uint32_t j : tree.nodes[node].members) tree.leaf_of[j] = node;
    }
  }
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      if (trees_[t].leaf_of[j] == kNoLeaf) trees_[t].leaf_of[j] = route(t, train_->instances[j]);
    }
  }
}

Forest Forest::fit(Dataset train, ForestConfig cfg, const FitOptions& options) {
  cfg.validate();
  validate(train);
  if (train.size() == 0) throw DataError("cannot fit a forest on an empty dataset");
  if (train.size() >= kNoLeaf) throw DataError("dataset too large");
  if (cfg.task != train.task) {
    throw DataError("forest task is " + std::string(to_string(cfg.task)) + " but the dataset targets are " +
                    std::string(to_string(train.task)));
  }
  Forest f;
  f.cfg_ = std::move(cfg);
  f.train_ = std::make_shared<const Dataset>(std::move(train));
  f.resolve_distances();
  const Dataset& d = *f.train_;
  const bool unfilled = std::any_of(d.instances.begin(), d.instances.end(),
                                    [](const Instance& x) { return !x.is_graph() && x.grid().has_unfilled(); });
  if (unfilled) {
    for (const auto& dist : f.distances_) {
      if (!dist->accepts_missing()) {
        throw DataError("distance '" + dist->spec().name + "' cannot handle missing values; impute first");
      }
    }
  }

  const std::size_t n = d.size();
  f.trees_.resize(f.cfg_.n_trees);
  parallel_for(f.cfg_.n_trees, options.threads, [&](std::size_t t) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng = make_rng(f.cfg_.seed, {t});
    Tree& tree = f.trees_[t];
    tree.multiplicity.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++tree.multiplicity[uniform_index(rng, n)];
    std::optional<std::uint32_t> fixed;
    if (f.cfg_.distance_choice == DistanceChoice::per_tree) {
      fixed = static_cast<std::uint32_t>(uniform_index(rng, f.distances_.size()));
    }
    std::vector<Member> root;
    for (std::size_t j = 0; j < n; ++j) {
      if (tree.multiplicity[j] > 0) root.push_back({static_cast<std::uint32_t>(j), tree.multiplicity[j]});
    }
    Grower(d, f.cfg_, f.distances_, rng, fixed).grow(tree, std::move(root));
    if (options.log_trees) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      log_info("tree " + std::to_string(t) + ": depth " + std::to_string(tree.depth()) + ", nodes " +
               std::to_string(tree.nodes.size()) + ", leaves " + std::to_string(tree.leaf_count()) + ", " +
               std::to_string(secs) + " s");
    }
  });
  f.finish_leaf_index();
  return f;
}

std::uint32_t Forest::route(std::size_t t, const Instance& x, RouteStats* stats) const {
  const Tree& tree = trees_[t];
  std::uint32_t node = 0;
  while (!tree.nodes[node].is_leaf()) {
    const TreeNode& n = tree.nodes[node];
    const DistanceMeasure& dist = *distances_[n.distance];
    std::size_t arg = 0;
    double lo = 0.0;
    for (std::size_t k = 0; k < n.exemplars.size(); ++k) {
      double v;
      try {
        v = dist(x, train_->instances[n.exemplars[k]]);
      } catch (const Error& e) {
        throw Error(e.category(), std::string(e.what()) + " (tree " + std::to_string(t) + ", node " +
                                      std::to_string(node) + ", exemplar " + train_->instances[n.exemplars[k]].id + ")");
      }
      if (k == 0 || v < lo) {
        lo = v;
        arg = k;
      }
    }
    if (stats) {
      stats->distance_evaluations += n.exemplars.size();
      ++stats->rounds;
    }
    node = n.children[arg];
  }
  return node;
}

std::vector<double> Forest::class_scores(const Instance& x, RouteStats* stats) const {
  std::vector<double> scores(train_->class_count(), 0.0);
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const TreeNode& leaf = trees_[t].nodes[route(t, x, stats)];
    for (std::size_t c = 0; c < scores.size(); ++c) scores[c] += leaf.class_weight[c] / leaf.total;
  }
  for (double& s : scores) s /= static_cast<double>(trees_.size());
  return scores;
}

double Forest::predict(const Instance& x, RouteStats* stats) const {
  if (cfg_.task == Task::classification) {
    const auto scores = class_scores(x, stats);
    return static_cast<double>(vote_argmax(scores));
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < trees_.size(); ++t) sum += trees_[t].nodes[route(t, x, stats)].mean;
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> Forest::predict(const Dataset& d, std::size_t threads) const {
  if (d.kind != train_->kind) throw DataError("payload kind differs from the training data");
  std::vector<double> out(d.size());
  parallel_for(d.size(), threads, [&](std::size_t i) { out[i] = predict(d.instances[i]); });
  return out;
}

OobPrediction Forest::predict_oob() const {
  const std::size_t n = train_->size();
  const bool cls = cfg_.task == Task::classification;
  OobPrediction out;
  out.values.assign(n, 0.0);
  out.covered.assign(n, false);
  if (cls) out.scores.assign(n, std::vector<double>(train_->class_count(), 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t s = 0;
    double sum = 0.0;
    for (const auto& tree : trees_) {
      if (tree.in_bag(i)) continue;
      ++s;
      const TreeNode& leaf = tree.nodes[tree.leaf_of[i]];
      if (cls) {
        for (std::size_t c = 0; c < leaf.class_weight.size(); ++c) out.scores[i][c] += leaf.class_weight[c] / leaf.total;
      } else {
        sum += leaf.mean;
      }
    }
    if (s == 0) continue;
    out.covered[i] = true;
    if (cls) {
      for (double& v : out.scores[i]) v /= static_cast<double>(s);
      out.values[i] = static_cast<double>(vote_argmax(out.scores[i]));
    } else {
      out.values[i] = sum / static_cast<double>(s);
    }
  }
  return out;
}

}  // namespace proxforest

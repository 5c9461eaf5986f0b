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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "proxforest/dataset.hpp"
#include "proxforest/random.hpp"

namespace pftest {

using namespace proxforest;

inline Dataset vector_dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                              std::size_t classes = 0) {
  Dataset d;
  d.task = Task::classification;
  d.kind = PayloadKind::vector;
  const std::size_t p = rows.empty() ? 0 : rows[0].size();
  for (std::size_t j = 0; j < p; ++j) d.feature_names.push_back("f" + std::to_string(j));
  d.categorical.assign(p, false);
  int top = 0;
  for (int l : labels) top = std::max(top, l);
  for (std::size_t c = 0; c < std::max<std::size_t>(classes, static_cast<std::size_t>(top) + 1); ++c) {
    d.class_names.push_back("c" + std::to_string(c));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Grid g(p, 1, rows[i]);
    for (std::size_t j = 0; j < p; ++j) {
      if (std::isnan(rows[i][j])) g.mark_missing(j, 0);
    }
    d.instances.push_back({"r" + std::to_string(i), std::move(g)});
  }
  d.labels = labels;
  return d;
}

inline Dataset regression_dataset(const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
  Dataset d = vector_dataset(rows, std::vector<int>(rows.size(), 0));
  d.task = Task::regression;
  d.labels.clear();
  d.class_names.clear();
  d.responses = y;
  return d;
}

inline Dataset series_dataset(const std::vector<Grid>& grids, const std::vector<int>& labels) {
  Dataset d;
  d.task = Task::classification;
  d.kind = PayloadKind::series;
  const std::size_t p = grids.empty() ? 0 : grids[0].channels();
  for (std::size_t j = 0; j < p; ++j) d.feature_names.push_back("ch" + std::to_string(j));
  d.categorical.assign(p, false);
  int top = 0;
  for (int l : labels) top = std::max(top, l);
  for (int c = 0; c <= top; ++c) d.class_names.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < grids.size(); ++i) d.instances.push_back({"s" + std::to_string(i), grids[i]});
  d.labels = labels;
  return d;
}

inline Grid random_series(Rng& rng, std::size_t channels, std::size_t length) {
  std::normal_distribution<double> normal;
  std::vector<double> v(channels * length);
  for (double& x : v) x = normal(rng);
  return Grid(channels, length, std::move(v));
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

inline Graph random_graph(Rng& rng, std::size_t nodes, double edge_prob, int alphabet) {
  std::uniform_int_distribution<int> label(0, alphabet - 1);
  std::bernoulli_distribution edge(edge_prob);
  std::vector<std::int64_t> labels(nodes);
  for (auto& l : labels) l = label(rng);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t a = 0; a < nodes; ++a) {
    for (std::uint32_t b = a + 1; b < nodes; ++b) {
      if (edge(rng)) edges.emplace_back(a, b);
    }
  }
  return Graph(std::move(labels), std::move(edges));
}

/// Same graph with node ids permuted.
inline Graph permuted(const Graph& g, Rng& rng) {
  std::vector<std::uint32_t> perm(g.node_count());
  for (std::uint32_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::int64_t> labels(g.node_count());
  for (std::size_t v = 0; v < g.node_count(); ++v) labels[perm[v]] = g.labels()[v];
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (auto [a, b] : g.edges()) {
    const std::uint32_t x = perm[a], y = perm[b];
    edges.emplace_back(std::min(x, y), std::max(x, y));
  }
  std::sort(edges.begin(), edges.end());
  return Graph(std::move(labels), std::move(edges));
}

inline std::vector<double> targets(const Dataset& d) {
  std::vector<double> t(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t[i] = d.target(i);
  return t;
}

}  // namespace pftest

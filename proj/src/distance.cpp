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
#include "proxforest/distance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "proxforest/error.hpp"
#include "proxforest/kernels.hpp"

namespace proxforest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_size(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) {
    throw DataError(std::string(what) + ": dimension mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
  }
}

/// Accumulated DTW cost over channels [c0, c1) of x and y.
double dtw_cost(const Grid& x, const Grid& y, std::size_t c0, std::size_t c1, DtwWindow window) {
  const std::size_t n = x.length();
  const std::size_t m = y.length();
  if (n == 0 || m == 0) throw DataError("dtw: empty series");
  const std::size_t gap = n > m ? n - m : m - n;
  const std::size_t w = window ? std::max(*window, gap) : std::max(n, m);

  std::vector<double> prev(m + 1, kInf);
  std::vector<double> cur(m + 1, kInf);
  std::vector<double> cost(m, 0.0);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > w ? i - w : 1;
    const std::size_t hi = std::min(m, i + w);
    const std::size_t span = hi - lo + 1;
    std::fill(cost.begin() + static_cast<std::ptrdiff_t>(lo - 1), cost.begin() + static_cast<std::ptrdiff_t>(hi), 0.0);
    for (std::size_t c = c0; c < c1; ++c) {
      kernels::accumulate_squared_difference(x.at(c, i - 1), y.channel(c).subspan(lo - 1, span),
                                             std::span<double>(cost).subspan(lo - 1, span));
    }
    std::fill(cur.begin(), cur.end(), kInf);
    for (std::size_t j = lo; j <= hi; ++j) {
      cur[j] = cost[j - 1] + std::min({prev[j - 1], prev[j], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  const double d = prev[m];
  if (std::isnan(d)) throw DataError("dtw: series holds unfilled missing values");
  return d;
}

void require_same_channels(const Grid& x, const Grid& y) {
  if (x.channels() != y.channels()) {
    throw DataError("dtw: channel count mismatch (" + std::to_string(x.channels()) + " vs " +
                    std::to_string(y.channels()) + ")");
  }
}

/// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::pair<std::uint64_t, std::uint32_t>> histogram(std::vector<std::uint64_t> labels) {
  std::sort(labels.begin(), labels.end());
  std::vector<std::pair<std::uint64_t, std::uint32_t>> out;
  for (std::uint64_t l : labels) {
    if (!out.empty() && out.back().first == l) {
      ++out.back().second;
    } else {
      out.emplace_back(l, 1);
    }
  }
  return out;
}

std::uint64_t l1(const std::vector<std::pair<std::uint64_t, std::uint32_t>>& a,
                 const std::vector<std::pair<std::uint64_t, std::uint32_t>>& b) {
  std::uint64_t sum = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      sum += a[i++].second;
    } else if (i == a.size() || b[j].first < a[i].first) {
      sum += b[j++].second;
    } else {
      sum += a[i].second > b[j].second ? a[i].second - b[j].second : b[j].second - a[i].second;
      ++i;
      ++j;
    }
  }
  return sum;
}

}  // namespace

double euclidean(std::span<const double> x, std::span<const double> y, MissingPolicy policy, bool rescale) {
  require_same_size(x, y, "euclidean");
  if (policy == MissingPolicy::error) {
    const double sum = kernels::squared_distance(x, y);
    if (std::isnan(sum)) throw DataError("euclidean: missing value under missing=error");
    return std::sqrt(sum);
  }
  const kernels::MaskedSum masked = kernels::masked_squared_distance(x, y);
  if (masked.count == 0) return x.empty() ? 0.0 : kUnreachable;
  double sum = masked.sum;
  if (rescale) sum *= static_cast<double>(x.size()) / static_cast<double>(masked.count);
  return std::sqrt(sum);
}

double cosine(std::span<const double> x, std::span<const double> y) {
  require_same_size(x, y, "cosine");
  const kernels::DotNorms r = kernels::dot_norms(x, y);
  if (std::isnan(r.dot) || std::isnan(r.norm_a) || std::isnan(r.norm_b)) {
    throw DataError("cosine: input holds unfilled missing values");
  }
  if (r.norm_a == 0.0 || r.norm_b == 0.0) throw DataError("cosine: zero-norm input");
  const double denom = r.norm_a * r.norm_b;
  // Cauchy-Schwarz equality up to rounding, e.g. x == y
  if (r.dot >= 0.0 && r.dot * r.dot >= denom) return 0.0;
  const double d = 1.0 - r.dot / std::sqrt(denom);
  return std::clamp(d, 0.0, 2.0);
}

double dtw_univariate(std::span<const double> x, std::span<const double> y, DtwWindow window) {
  return dtw_cost(Grid(1, x.size(), std::vector<double>(x.begin(), x.end())),
                  Grid(1, y.size(), std::vector<double>(y.begin(), y.end())), 0, 1, window);
}

double dtw_dependent(const Grid& x, const Grid& y, DtwWindow window) {
  require_same_channels(x, y);
  return dtw_cost(x, y, 0, x.channels(), window);
}

double dtw_independent(const Grid& x, const Grid& y, DtwWindow window) {
  require_same_channels(x, y);
  double sum = 0.0;
  for (std::size_t c = 0; c < x.channels(); ++c) sum += dtw_cost(x, y, c, c + 1, window);
  return sum;
}

WlFeatures wl_features(const Graph& g, int depth) {
  if (depth < 0) throw ConfigError("wl: depth must be >= 0");
  WlFeatures f;
  f.nodes = g.node_count();
  std::vector<std::uint64_t> labels(g.labels().begin(), g.labels().end());
  std::vector<std::uint64_t> next(labels.size());
  std::vector<std::uint64_t> neighborhood;
  for (int r = 0; r <= depth; ++r) {
    f.rounds.push_back(histogram(labels));
    if (r == depth) break;
    for (std::size_t v = 0; v < labels.size(); ++v) {
      neighborhood.clear();
      for (std::uint32_t u : g.neighbors(v)) neighborhood.push_back(labels[u]);
      std::sort(neighborhood.begin(), neighborhood.end());
      std::uint64_t h = mix(labels[v] ^ 0x5745495346454c52ULL);
      for (std::uint64_t l : neighborhood) h = mix(h ^ (l + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
      next[v] = h;
    }
    std::swap(labels, next);
  }
  return f;
}

double wl_distance(const WlFeatures& a, const WlFeatures& b) {
  if (a.rounds.size() != b.rounds.size()) throw DataError("wl: features computed with different depths");
  const std::size_t total = a.nodes + b.nodes;
  if (total == 0) return 0.0;
  std::uint64_t sum = 0;
  for (std::size_t r = 0; r < a.rounds.size(); ++r) sum += l1(a.rounds[r], b.rounds[r]);
  return static_cast<double>(sum) / (static_cast<double>(total) * static_cast<double>(a.rounds.size()));
}

double wl_distance(const Graph& a, const Graph& b, int depth) {
  return wl_distance(wl_features(a, depth), wl_features(b, depth));
}

}  // namespace proxforest

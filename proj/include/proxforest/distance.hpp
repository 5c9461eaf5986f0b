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
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proxforest/dataset.hpp"
#include "proxforest/prediction_table.hpp"

namespace proxforest {

enum class MissingPolicy { skip, error };

/// Returned when two payloads share no comparable coordinate. Orders above
/// every finite distance; routing treats it as "farthest".
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Sakoe-Chiba band half-width; nullopt means unbounded.
using DtwWindow = std::optional<std::size_t>;

// -- Measures on raw payloads ------------------------------------------------

/// Euclidean distance. With MissingPolicy::skip, coordinates where either
/// side is NaN are left out of the sum; `rescale` multiplies the partial sum
/// by (dimension / compared coordinates) before the square root.
double euclidean(std::span<const double> x, std::span<const double> y,
                 MissingPolicy policy = MissingPolicy::skip, bool rescale = false);

/// 1 - cos(x, y), clamped to [0, 2].
double cosine(std::span<const double> x, std::span<const double> y);

/// DTW over two univariate sequences with squared-difference cell cost and no
/// final square root.
double dtw_univariate(std::span<const double> x, std::span<const double> y, DtwWindow window = std::nullopt);

/// Multichannel DTW aligning all channels jointly; cell cost is the squared
/// Euclidean distance across channels. When the lengths differ the band is
/// widened to at least |T_x - T_y| so the end cell stays reachable.
double dtw_dependent(const Grid& x, const Grid& y, DtwWindow window = std::nullopt);

/// Sum over channels of univariate DTW.
double dtw_independent(const Grid& x, const Grid& y, DtwWindow window = std::nullopt);

/// Per-round label histograms from Weisfeiler-Lehman refinement. Round 0 uses
/// the node labels; round r+1 relabels each node by a hash of its round-r
/// label and the sorted multiset of its neighbors' round-r labels.
struct WlFeatures {
  std::size_t nodes = 0;
  std::vector<std::vector<std::pair<std::uint64_t, std::uint32_t>>> rounds;  // sorted by label
};

WlFeatures wl_features(const Graph& g, int depth);

/// L1 distance between concatenated per-round histograms divided by
/// (V1 + V2) * (depth + 1).
double wl_distance(const WlFeatures& a, const WlFeatures& b);
double wl_distance(const Graph& a, const Graph& b, int depth);

// -- Registry ----------------------------------------------------------------

/// Named, parameterized distance. Text form: `name` or `name:key=value,...`,
/// e.g. `dtw_d:w=3`, `wl:h=2`, `meta_class:predictions=preds.csv`.
struct DistanceSpec {
  std::string name;
  std::map<std::string, std::string> params;
  std::shared_ptr<const PredictionTable> table;  // meta distances only

  static DistanceSpec parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const DistanceSpec& a, const DistanceSpec& b) {
    return a.name == b.name && a.params == b.params && a.table == b.table;
  }
};

/// Symmetric, nonnegative, zero on identical payloads. The triangle inequality
/// is not part of the contract.
class DistanceMeasure {
 public:
  virtual ~DistanceMeasure() = default;
  virtual double operator()(const Instance& a, const Instance& b) const = 0;
  /// True when unfilled (NaN) values are handled rather than rejected.
  virtual bool accepts_missing() const { return false; }
  const DistanceSpec& spec() const { return spec_; }

 protected:
  explicit DistanceMeasure(DistanceSpec spec) : spec_(std::move(spec)) {}

 private:
  DistanceSpec spec_;
};

using DistancePtr = std::shared_ptr<const DistanceMeasure>;

/// Wraps a callable as a measure; the usual way to write a plugin.
DistancePtr make_distance(DistanceSpec spec, std::function<double(const Instance&, const Instance&)> fn,
                          bool accepts_missing = false);

struct ParamInfo {
  std::string name;
  std::string default_value;
  std::string description;
};

struct DistancePlugin {
  std::string name;
  std::vector<PayloadKind> kinds;
  std::vector<ParamInfo> params;
  std::string description;
  std::function<DistancePtr(const DistanceSpec&)> make;
};

class DistanceRegistry {
 public:
  /// Process-wide registry with the built-ins already registered.
  static DistanceRegistry& global();

  /// Throws ConfigError if the name is taken.
  void add(DistancePlugin plugin);

  /// Validates parameter names against the plugin schema, then builds the
  /// measure. Throws ConfigError for unknown names or invalid parameters.
  DistancePtr resolve(const DistanceSpec& spec) const;

  const DistancePlugin& plugin(std::string_view name) const;
  bool contains(std::string_view name) const;
  bool supports(std::string_view name, PayloadKind kind) const;
  std::vector<std::string> names() const;

 private:
  DistanceRegistry() = default;
  std::map<std::string, DistancePlugin, std::less<>> plugins_;
};

inline DistancePtr registry_resolve(const DistanceSpec& spec) { return DistanceRegistry::global().resolve(spec); }

namespace detail {
/// Parameter helpers shared by built-ins and plugins.
DtwWindow parse_window(const DistanceSpec& spec);
int parse_depth(const DistanceSpec& spec);
}  // namespace detail

}  // namespace proxforest

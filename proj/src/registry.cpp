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
#include <algorithm>
#include <charconv>
#include <mutex>
#include <string>

#include "proxforest/distance.hpp"
#include "proxforest/error.hpp"
#include "proxforest/meta.hpp"

namespace proxforest {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

class FunctionDistance final : public DistanceMeasure {
 public:
  FunctionDistance(DistanceSpec spec, std::function<double(const Instance&, const Instance&)> fn, bool accepts)
      : DistanceMeasure(std::move(spec)), fn_(std::move(fn)), accepts_(accepts) {}
  double operator()(const Instance& a, const Instance& b) const override { return fn_(a, b); }
  bool accepts_missing() const override { return accepts_; }

 private:
  std::function<double(const Instance&, const Instance&)> fn_;
  bool accepts_;
};

std::string param_or(const DistanceSpec& spec, const std::string& key, std::string fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

bool parse_flag(const DistanceSpec& spec, const std::string& key) {
  const std::string v = param_or(spec, key, "false");
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(spec.name + ": " + key + " must be true or false, got '" + v + "'");
}

const Grid& grid_of(const Instance& x, const char* what) {
  if (x.is_graph()) throw DataError(std::string(what) + ": graph payloads are not supported");
  return x.grid();
}

std::shared_ptr<const PredictionTable> table_of(const DistanceSpec& spec) {
  if (spec.table) return spec.table;
  auto it = spec.params.find("predictions");
  if (it == spec.params.end()) throw ConfigError(spec.name + ": needs predictions=<file> or an attached table");
  return std::make_shared<const PredictionTable>(load_predictions(it->second));
}

void add_builtins(DistanceRegistry& r) {
  r.add({"euclidean",
         {PayloadKind::vector, PayloadKind::series},
         {{"missing", "skip", "skip: compare mutually observed coordinates only; error: reject NaN"},
          {"rescale", "false", "scale the partial sum by total/compared coordinates"}},
         "Euclidean distance over all values of equal-shape payloads",
         [](const DistanceSpec& spec) {
           const std::string m = param_or(spec, "missing", "skip");
           if (m != "skip" && m != "error") throw ConfigError("euclidean: missing must be skip or error");
           const MissingPolicy policy = m == "skip" ? MissingPolicy::skip : MissingPolicy::error;
           const bool rescale = parse_flag(spec, "rescale");
           return make_distance(
               spec,
               [policy, rescale](const Instance& a, const Instance& b) {
                 return euclidean(grid_of(a, "euclidean").values(), grid_of(b, "euclidean").values(), policy, rescale);
               },
               policy == MissingPolicy::skip);
         }});
  r.add({"cosine",
         {PayloadKind::vector, PayloadKind::series},
         {},
         "1 - cosine similarity, in [0, 2]",
         [](const DistanceSpec& spec) {
           return make_distance(spec, [](const Instance& a, const Instance& b) {
             return cosine(grid_of(a, "cosine").values(), grid_of(b, "cosine").values());
           });
         }});
  r.add({"dtw_d",
         {PayloadKind::series},
         {{"w", "inf", "Sakoe-Chiba band half-width, or inf"}},
         "dependent DTW: channels aligned jointly",
         [](const DistanceSpec& spec) {
           const DtwWindow w = detail::parse_window(spec);
           return make_distance(spec, [w](const Instance& a, const Instance& b) {
             return dtw_dependent(grid_of(a, "dtw_d"), grid_of(b, "dtw_d"), w);
           });
         }});
  r.add({"dtw_i",
         {PayloadKind::series},
         {{"w", "inf", "Sakoe-Chiba band half-width, or inf"}},
         "independent DTW: sum of per-channel alignments",
         [](const DistanceSpec& spec) {
           const DtwWindow w = detail::parse_window(spec);
           return make_distance(spec, [w](const Instance& a, const Instance& b) {
             return dtw_independent(grid_of(a, "dtw_i"), grid_of(b, "dtw_i"), w);
           });
         }});
  r.add({"wl",
         {PayloadKind::graph},
         {{"h", "3", "refinement rounds"}},
         "Weisfeiler-Lehman histogram L1 distance",
         [](const DistanceSpec& spec) {
           const int h = detail::parse_depth(spec);
           return make_distance(spec, [h](const Instance& a, const Instance& b) {
             if (!a.is_graph() || !b.is_graph()) throw DataError("wl: graph payloads required");
             return wl_distance(a.graph(), b.graph(), h);
           });
         }});
  r.add({"meta_class",
         {PayloadKind::vector, PayloadKind::series, PayloadKind::graph},
         {{"predictions", "", "CSV of id,label predictions"}},
         "0 when the pretrained model predicts the same label, else 1",
         [](const DistanceSpec& spec) {
           auto table = table_of(spec);
           if (table->form() != PredictionTable::Form::label && !table->empty()) {
             throw ConfigError("meta_class: prediction table must hold labels");
           }
           return make_distance(
               spec, [table](const Instance& a, const Instance& b) { return meta_class_distance(a, b, *table); }, true);
         }});
  r.add({"meta_prob",
         {PayloadKind::vector, PayloadKind::series, PayloadKind::graph},
         {{"predictions", "", "CSV of id,<class>... probability rows"}},
         "Euclidean distance between predicted probability rows",
         [](const DistanceSpec& spec) {
           auto table = table_of(spec);
           if (table->form() != PredictionTable::Form::probability && !table->empty()) {
             throw ConfigError("meta_prob: prediction table must hold probability rows");
           }
           return make_distance(
               spec, [table](const Instance& a, const Instance& b) { return meta_prob_distance(a, b, *table); }, true);
         }});
}

}  // namespace

DistanceSpec DistanceSpec::parse(std::string_view text) {
  DistanceSpec spec;
  text = trim(text);
  const auto colon = text.find(':');
  spec.name = std::string(trim(text.substr(0, colon)));
  if (spec.name.empty()) throw ConfigError("empty distance name");
  if (colon == std::string_view::npos) return spec;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("distance parameter '" + std::string(item) + "' is not key=value");
    const std::string key(trim(item.substr(0, eq)));
    if (!spec.params.emplace(key, std::string(trim(item.substr(eq + 1)))).second) {
      throw ConfigError("distance parameter '" + key + "' given twice");
    }
  }
  return spec;
}

std::string DistanceSpec::to_string() const {
  std::string out = name;
  char sep = ':';
  for (const auto& [k, v] : params) {
    out += sep;
    out += k + "=" + v;
    sep = ',';
  }
  return out;
}

DistancePtr make_distance(DistanceSpec spec, std::function<double(const Instance&, const Instance&)> fn,
                          bool accepts_missing) {
  return std::make_shared<FunctionDistance>(std::move(spec), std::move(fn), accepts_missing);
}

DistanceRegistry& DistanceRegistry::global() {
  static DistanceRegistry* instance = [] {
    auto* r = new DistanceRegistry();
    add_builtins(*r);
    return r;
  }();
  return *instance;
}

void DistanceRegistry::add(DistancePlugin plugin) {
  if (plugin.name.empty() || !plugin.make) throw ConfigError("distance plugin needs a name and a factory");
  if (plugin.name.find_first_of(":,=") != std::string::npos) {
    throw ConfigError("distance name '" + plugin.name + "' contains a reserved character");
  }
  const std::string name = plugin.name;
  if (!plugins_.emplace(name, std::move(plugin)).second) {
    throw ConfigError("distance '" + name + "' is already registered");
  }
}

const DistancePlugin& DistanceRegistry::plugin(std::string_view name) const {
  auto it = plugins_.find(name);
  if (it == plugins_.end()) {
    std::string known;
    for (const auto& [k, _] : plugins_) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("unknown distance '" + std::string(name) + "' (known: " + known + ")");
  }
  return it->second;
}

DistancePtr DistanceRegistry::resolve(const DistanceSpec& spec) const {
  const DistancePlugin& p = plugin(spec.name);
  for (const auto& [key, _] : spec.params) {
    const bool known = std::any_of(p.params.begin(), p.params.end(), [&](const ParamInfo& i) { return i.name == key; });
    if (!known) {
      std::string valid;
      for (const auto& i : p.params) valid += (valid.empty() ? "" : ", ") + i.name;
      throw ConfigError(spec.name + ": unknown parameter '" + key + "'" +
                        (valid.empty() ? " (takes none)" : " (valid: " + valid + ")"));
    }
  }
  return p.make(spec);
}

bool DistanceRegistry::contains(std::string_view name) const { return plugins_.find(name) != plugins_.end(); }

bool DistanceRegistry::supports(std::string_view name, PayloadKind kind) const {
  const auto& kinds = plugin(name).kinds;
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

std::vector<std::string> DistanceRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : plugins_) out.push_back(k);
  return out;
}

namespace detail {

DtwWindow parse_window(const DistanceSpec& spec) {
  auto it = spec.params.find("w");
  if (it == spec.params.end() || it->second == "inf" || it->second == "none") return std::nullopt;
  std::size_t w = 0;
  const auto& s = it->second;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), w);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError(spec.name + ": w must be a nonnegative integer or inf, got '" + s + "'");
  }
  return w;
}

int parse_depth(const DistanceSpec& spec) {
  auto it = spec.params.find("h");
  if (it == spec.params.end()) return 3;
  int h = 0;
  const auto& s = it->second;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), h);
  if (ec != std::errc() || end != s.data() + s.size() || h < 0) {
    throw ConfigError(spec.name + ": h must be a nonnegative integer, got '" + s + "'");
  }
  return h;
}

}  // namespace detail
}  // namespace proxforest

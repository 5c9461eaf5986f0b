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
#include "proxforest/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "proxforest/csv.hpp"
#include "proxforest/error.hpp"
#include "proxforest/log.hpp"
#include "proxforest/random.hpp"

namespace proxforest {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_number(std::string_view text) {
  std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Numeric order when every name parses as a number, lexicographic otherwise.
std::vector<std::string> order_class_names(const std::set<std::string>& names) {
  std::vector<std::string> out(names.begin(), names.end());
  const bool numeric = std::all_of(out.begin(), out.end(),
                                   [](const std::string& s) { return parse_number(s).has_value(); });
  if (numeric) {
    std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string label_text(const json& value, const std::string& where) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_number()) return csv::format_double(value.get<double>());
  throw FormatError(where + ": label must be a string or number");
}

double response_value(const json& value, const std::string& where) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    if (auto v = parse_number(value.get<std::string>())) return *v;
  }
  throw FormatError(where + ": regression target must be numeric");
}

void assign_targets(Dataset& d, const std::vector<std::string>& raw) {
  if (d.task == Task::classification) {
    std::set<std::string> names(raw.begin(), raw.end());
    d.class_names = order_class_names(names);
    std::map<std::string, int> index;
    for (std::size_t c = 0; c < d.class_names.size(); ++c) index[d.class_names[c]] = static_cast<int>(c);
    d.labels.reserve(raw.size());
    for (const auto& r : raw) d.labels.push_back(index.at(r));
  } else {
    d.responses.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto v = parse_number(raw[i]);
      if (!v || !std::isfinite(*v)) {
        throw FormatError("instance " + d.instances[i].id + ": non-numeric regression target '" + raw[i] + "'");
      }
      d.responses.push_back(*v);
    }
  }
}

std::string target_text(const Dataset& d, std::size_t i) {
  return d.task == Task::classification ? d.class_names[d.labels[i]] : csv::format_double(d.responses[i]);
}

json target_json(const Dataset& d, std::size_t i) {
  if (d.task == Task::classification) return d.class_names[d.labels[i]];
  return d.responses[i];
}

void shuffle_indices(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace

std::string_view to_string(Task task) {
  return task == Task::classification ? "classification" : "regression";
}

std::string_view to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::vector:
      return "vector";
    case PayloadKind::series:
      return "series";
    case PayloadKind::graph:
      return "graph";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::size_t channels, std::size_t length)
    : channels_(channels), length_(length), values_(channels * length, 0.0) {}

Grid::Grid(std::size_t channels, std::size_t length, std::vector<double> values)
    : channels_(channels), length_(length), values_(std::move(values)) {
  if (values_.size() != channels_ * length_) throw DataError("grid value count does not match its shape");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::isnan(values_[i])) {
      if (missing_.empty()) missing_.assign(values_.size(), 0);
      missing_[i] = 1;
    }
  }
}

bool Grid::has_missing() const {
  return std::any_of(missing_.begin(), missing_.end(), [](std::uint8_t m) { return m != 0; });
}

std::size_t Grid::missing_count() const {
  return static_cast<std::size_t>(std::count(missing_.begin(), missing_.end(), std::uint8_t{1}));
}

bool Grid::has_unfilled() const {
  return std::any_of(values_.begin(), values_.end(), [](double v) { return std::isnan(v); });
}

void Grid::mark_missing(std::size_t j, std::size_t t) {
  if (missing_.empty()) missing_.assign(values_.size(), 0);
  missing_[j * length_ + t] = 1;
  values_[j * length_ + t] = kMissing;
}

void Grid::mark_observed(std::size_t j, std::size_t t, double value) {
  if (!missing_.empty()) missing_[j * length_ + t] = 0;
  values_[j * length_ + t] = value;
}

std::vector<std::size_t> Grid::missing_positions(std::size_t j) const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < length_; ++t) {
    if (is_missing(j, t)) out.push_back(t);
  }
  return out;
}

std::vector<std::size_t> Grid::observed_positions(std::size_t j) const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < length_; ++t) {
    if (!is_missing(j, t)) out.push_back(t);
  }
  return out;
}

bool operator==(const Grid& a, const Grid& b) {
  if (a.channels_ != b.channels_ || a.length_ != b.length_) return false;
  if (a.has_missing() != b.has_missing()) return false;
  if (a.has_missing() && a.missing_ != b.missing_) return false;
  // bitwise, so unfilled NaN cells compare equal
  return std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(double)) == 0;
}

// ---------------------------------------------------------------------------
// Graph

Graph::Graph(std::vector<std::int64_t> node_labels,
             std::vector<std::pair<std::uint32_t, std::uint32_t>> edges)
    : labels_(std::move(node_labels)) {
  const std::size_t n = labels_.size();
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) {
      throw DataError("edge [" + std::to_string(u) + "," + std::to_string(v) + "] references a node outside [0," +
                      std::to_string(n) + ")");
    }
    if (u == v) continue;
    edges_.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  offsets_.assign(n + 1, 0);
  for (auto [u, v] : edges_) {
    ++offsets_[u + 1];
    ++offsets_[v + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacency_.resize(2 * edges_.size());
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (auto [u, v] : edges_) {
    adjacency_[fill[u]++] = v;
    adjacency_[fill[v]++] = u;
  }
}

// ---------------------------------------------------------------------------
// Dataset

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out = empty_like();
  out.instances.reserve(indices.size());
  for (std::size_t i : indices) {
    out.instances.push_back(instances.at(i));
    if (task == Task::classification) {
      out.labels.push_back(labels.at(i));
    } else {
      out.responses.push_back(responses.at(i));
    }
  }
  return out;
}

Dataset Dataset::empty_like() const {
  Dataset out;
  out.task = task;
  out.kind = kind;
  out.class_names = class_names;
  out.feature_names = feature_names;
  out.categorical = categorical;
  out.label_name = label_name;
  out.label_column = label_column;
  out.id_name = id_name;
  return out;
}

std::size_t Dataset::missing_count() const {
  std::size_t n = 0;
  for (const auto& inst : instances) {
    if (!inst.is_graph()) n += inst.grid().missing_count();
  }
  return n;
}

void validate(const Dataset& d) {
  const std::size_t n = d.instances.size();
  if (n == 0) throw DataError("dataset is empty");
  if (d.task == Task::classification) {
    if (d.labels.size() != n) throw DataError("label count does not match instance count");
    for (int y : d.labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= d.class_names.size()) throw DataError("label index out of range");
    }
  } else {
    if (d.responses.size() != n) throw DataError("target count does not match instance count");
    for (double y : d.responses) {
      if (!std::isfinite(y)) throw DataError("regression targets must be finite");
    }
  }
  if (d.categorical.size() != d.feature_names.size()) throw DataError("categorical flags do not match features");

  for (const auto& inst : d.instances) {
    if ((d.kind == PayloadKind::graph) != inst.is_graph()) {
      throw DataError("instance " + inst.id + ": payload kind differs from the dataset's");
    }
    if (inst.is_graph()) continue;
    const Grid& g = inst.grid();
    if (g.channels() != d.feature_names.size()) {
      throw DataError("instance " + inst.id + ": expected " + std::to_string(d.feature_names.size()) +
                      " channels, found " + std::to_string(g.channels()));
    }
    if (g.length() == 0) throw DataError("instance " + inst.id + ": empty series");
    if (d.kind == PayloadKind::vector && g.length() != 1) {
      throw DataError("instance " + inst.id + ": vector payload with length != 1");
    }
    for (std::size_t j = 0; j < g.channels(); ++j) {
      for (std::size_t t = 0; t < g.length(); ++t) {
        const double v = g.at(j, t);
        if (!g.is_missing(j, t) && !std::isfinite(v)) {
          throw DataError("instance " + inst.id + ": non-finite observed value");
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Loaders

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  auto in = open_input(path);
  auto rows = csv::read_rows(in);
  if (rows.empty()) throw FormatError(path.string() + ": missing header row");
  const auto& header = rows.front();
  const std::size_t width = header.size();

  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < width; ++c) {
      if (trim(header[c]) == name) return c;
    }
    return std::nullopt;
  };
  const auto label_col = find_column(options.label_column);
  if (!label_col) throw FormatError(path.string() + ": label column '" + options.label_column + "' not found");
  std::optional<std::size_t> id_col;
  if (options.id_column) {
    id_col = find_column(*options.id_column);
    if (!id_col) throw FormatError(path.string() + ": id column '" + *options.id_column + "' not found");
  }

  Dataset d;
  d.task = options.task;
  d.kind = PayloadKind::vector;
  d.label_name = options.label_column;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == *label_col || (id_col && c == *id_col)) continue;
    feature_cols.push_back(c);
    d.feature_names.push_back(trim(header[c]));
  }
  d.label_column = *label_col - ((id_col && *id_col < *label_col) ? 1 : 0);
  if (options.id_column) d.id_name = *options.id_column;
  for (const auto& name : d.feature_names) {
    d.categorical.push_back(std::find(options.categorical_columns.begin(), options.categorical_columns.end(),
                                      name) != options.categorical_columns.end());
  }
  for (const auto& name : options.categorical_columns) {
    if (std::find(d.feature_names.begin(), d.feature_names.end(), name) == d.feature_names.end()) {
      throw FormatError(path.string() + ": categorical column '" + name + "' not found");
    }
  }

  std::vector<std::string> raw_targets;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = path.string() + " row " + std::to_string(r);
    if (row.size() != width) {
      throw FormatError(where + ": expected " + std::to_string(width) + " fields, found " +
                        std::to_string(row.size()));
    }
    std::string id = id_col ? trim(row[*id_col]) : std::to_string(r - 1);
    std::vector<double> values;
    values.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      const std::string cell = trim(row[c]);
      if (cell.empty()) {
        values.push_back(kMissing);
        continue;
      }
      auto v = parse_number(cell);
      if (!v || !std::isfinite(*v)) {
        throw FormatError(where + ": column '" + header[c] + "' holds non-numeric value '" + cell + "'");
      }
      values.push_back(*v);
    }
    if (!values.empty() && std::all_of(values.begin(), values.end(), [](double v) { return std::isnan(v); })) {
      throw DataError("instance " + id + ": every feature is missing");
    }
    const std::string label = trim(row[*label_col]);
    if (label.empty()) throw FormatError(where + ": empty label");
    raw_targets.push_back(label);
    const std::size_t p = values.size();
    d.instances.push_back(Instance{std::move(id), Grid(p, 1, std::move(values))});
  }
  assign_targets(d, raw_targets);
  validate(d);
  return d;
}

namespace {

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.is_object()) throw FormatError(path.string() + " line " + std::to_string(lineno) + ": not an object");
    fn(rec, path.string() + " line " + std::to_string(lineno));
  }
}

std::string record_id(const json& rec, std::size_t fallback) {
  if (!rec.contains("id")) return std::to_string(fallback);
  return label_text(rec["id"], "id");
}

}  // namespace

Dataset load_series_jsonl(const std::filesystem::path& path, Task task) {
  Dataset d;
  d.task = task;
  d.kind = PayloadKind::series;
  std::vector<std::string> raw_targets;
  for_each_record(path, [&](const json& rec, const std::string& where) {
    if (!rec.contains("channels") || !rec["channels"].is_array()) throw FormatError(where + ": missing 'channels'");
    if (!rec.contains("label")) throw FormatError(where + ": missing 'label'");
    const auto& channels = rec["channels"];
    const std::size_t p = channels.size();
    if (p == 0) throw FormatError(where + ": no channels");
    const std::size_t length = channels[0].size();
    std::vector<double> values;
    values.reserve(p * length);
    for (std::size_t j = 0; j < p; ++j) {
      if (!channels[j].is_array()) throw FormatError(where + ": channel " + std::to_string(j) + " is not an array");
      if (channels[j].size() != length) {
        throw FormatError(where + ": channel " + std::to_string(j) + " has length " +
                          std::to_string(channels[j].size()) + ", channel 0 has " + std::to_string(length));
      }
      for (const auto& v : channels[j]) {
        if (v.is_null()) {
          values.push_back(kMissing);
        } else if (v.is_number()) {
          values.push_back(v.get<double>());
        } else {
          throw FormatError(where + ": non-numeric series value");
        }
      }
    }
    if (length == 0) throw FormatError(where + ": empty series");
    std::string id = record_id(rec, d.instances.size());
    if (std::all_of(values.begin(), values.end(), [](double v) { return std::isnan(v); })) {
      throw DataError("instance " + id + ": every value is missing");
    }
    raw_targets.push_back(task == Task::classification ? label_text(rec["label"], where)
                                                       : csv::format_double(response_value(rec["label"], where)));
    if (d.feature_names.empty()) {
      for (std::size_t j = 0; j < p; ++j) d.feature_names.push_back("c" + std::to_string(j));
      d.categorical.assign(p, false);
    }
    d.instances.push_back(Instance{std::move(id), Grid(p, length, std::move(values))});
  });
  if (d.instances.empty()) throw FormatError(path.string() + ": no records");
  assign_targets(d, raw_targets);
  validate(d);
  return d;
}

Dataset load_graph_jsonl(const std::filesystem::path& path, Task task) {
  Dataset d;
  d.task = task;
  d.kind = PayloadKind::graph;
  std::vector<std::string> raw_targets;
  for_each_record(path, [&](const json& rec, const std::string& where) {
    if (!rec.contains("nodes") || !rec["nodes"].is_array()) throw FormatError(where + ": missing 'nodes'");
    if (!rec.contains("label")) throw FormatError(where + ": missing 'label'");
    std::vector<std::int64_t> nodes;
    for (const auto& v : rec["nodes"]) {
      if (!v.is_number_integer()) throw FormatError(where + ": node labels must be integers");
      nodes.push_back(v.get<std::int64_t>());
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    if (rec.contains("edges")) {
      for (const auto& e : rec["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
          throw FormatError(where + ": edges must be [u, v] integer pairs");
        }
        const auto u = e[0].get<std::int64_t>();
        const auto v = e[1].get<std::int64_t>();
        if (u < 0 || v < 0 || u >= static_cast<std::int64_t>(nodes.size()) ||
            v >= static_cast<std::int64_t>(nodes.size())) {
          throw FormatError(where + ": edge [" + std::to_string(u) + "," + std::to_string(v) + "] is out of range for " +
                            std::to_string(nodes.size()) + " nodes");
        }
        edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
      }
    }
    raw_targets.push_back(task == Task::classification ? label_text(rec["label"], where)
                                                       : csv::format_double(response_value(rec["label"], where)));
    d.instances.push_back(Instance{record_id(rec, d.instances.size()), Graph(std::move(nodes), std::move(edges))});
  });
  if (d.instances.empty()) throw FormatError(path.string() + ": no records");
  assign_targets(d, raw_targets);
  validate(d);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const CsvOptions& options) {
  if (path.extension() == ".csv") return load_csv(path, options);
  auto in = open_input(path);
  std::string line;
  while (std::getline(in, line) && trim(line).empty()) {
  }
  json first;
  try {
    first = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": first record is not JSON: " + e.what());
  }
  if (first.contains("channels")) return load_series_jsonl(path, options.task);
  if (first.contains("nodes")) return load_graph_jsonl(path, options.task);
  throw FormatError(path.string() + ": records carry neither 'channels' nor 'nodes'");
}

// ---------------------------------------------------------------------------
// Writers

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  if (d.kind != PayloadKind::vector) throw DataError("CSV output requires vector payloads");
  auto out = open_output(path);
  std::vector<std::string> header = d.feature_names;
  const std::size_t label_at = std::min(d.label_column, header.size());
  header.insert(header.begin() + static_cast<std::ptrdiff_t>(label_at), d.label_name);
  if (!d.id_name.empty()) header.insert(header.begin(), d.id_name);
  csv::write_row(out, header);
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<std::string> row;
    const Grid& g = d.instances[i].grid();
    for (std::size_t j = 0; j < g.channels(); ++j) {
      const double v = g.at(j, 0);
      row.push_back(std::isnan(v) ? std::string() : csv::format_double(v));
    }
    row.insert(row.begin() + static_cast<std::ptrdiff_t>(label_at), target_text(d, i));
    if (!d.id_name.empty()) row.insert(row.begin(), d.instances[i].id);
    csv::write_row(out, row);
  }
}

void write_series_jsonl(const Dataset& d, const std::filesystem::path& path) {
  if (d.kind != PayloadKind::series) throw DataError("series JSONL output requires series payloads");
  auto out = open_output(path);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Grid& g = d.instances[i].grid();
    json channels = json::array();
    for (std::size_t j = 0; j < g.channels(); ++j) {
      json ch = json::array();
      for (double v : g.channel(j)) ch.push_back(std::isnan(v) ? json(nullptr) : json(v));
      channels.push_back(std::move(ch));
    }
    json rec = {{"id", d.instances[i].id}, {"label", target_json(d, i)}, {"channels", std::move(channels)}};
    out << rec.dump() << '\n';
  }
}

void write_graph_jsonl(const Dataset& d, const std::filesystem::path& path) {
  if (d.kind != PayloadKind::graph) throw DataError("graph JSONL output requires graph payloads");
  auto out = open_output(path);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Graph& g = d.instances[i].graph();
    json edges = json::array();
    for (auto [u, v] : g.edges()) edges.push_back({u, v});
    json rec = {{"id", d.instances[i].id},
                {"label", target_json(d, i)},
                {"nodes", std::vector<std::int64_t>(g.labels().begin(), g.labels().end())},
                {"edges", std::move(edges)}};
    out << rec.dump() << '\n';
  }
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  switch (d.kind) {
    case PayloadKind::vector:
      write_csv(d, path);
      break;
    case PayloadKind::series:
      write_series_jsonl(d, path);
      break;
    case PayloadKind::graph:
      write_graph_jsonl(d, path);
      break;
  }
}

// ---------------------------------------------------------------------------
// Corruption and splitting

Dataset inject_mcar(const Dataset& d, double fraction, std::uint64_t seed) {
  if (d.kind == PayloadKind::graph) throw DataError("MCAR injection requires vector or series payloads");
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("MCAR fraction must lie in [0, 1)");

  struct Entry {
    std::uint32_t instance;
    std::uint32_t channel;
    std::uint32_t position;
  };
  std::vector<Entry> entries;
  std::vector<std::size_t> observed(d.size(), 0);
  for (std::size_t n = 0; n < d.size(); ++n) {
    const Grid& g = d.instances[n].grid();
    for (std::size_t j = 0; j < g.channels(); ++j) {
      for (std::size_t t = 0; t < g.length(); ++t) {
        if (g.is_missing(j, t)) continue;
        entries.push_back({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(t)});
        ++observed[n];
      }
    }
  }
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(entries.size())));
  if (k == 0) return d;
  if (k + d.size() > entries.size()) {
    throw DataError("cannot mask " + std::to_string(k) + " of " + std::to_string(entries.size()) +
                    " entries and keep one observed entry in each of " + std::to_string(d.size()) + " instances");
  }

  Rng rng = make_rng(seed, {0x6d636172ULL});
  for (std::size_t i = 0; i < k; ++i) std::swap(entries[i], entries[i + uniform_index(rng, entries.size() - i)]);
  std::vector<std::size_t> remaining = observed;
  for (std::size_t i = 0; i < k; ++i) --remaining[entries[i].instance];

  // Instances that lost every entry get one back; a random entry from an
  // instance with at least two observed entries is masked in its place.
  for (std::size_t n = 0; n < d.size(); ++n) {
    if (remaining[n] > 0 || observed[n] == 0) continue;
    std::vector<std::size_t> own;
    for (std::size_t i = 0; i < k; ++i) {
      if (entries[i].instance == n) own.push_back(i);
    }
    const std::size_t restore = own[uniform_index(rng, own.size())];
    for (;;) {
      const std::size_t donor = k + uniform_index(rng, entries.size() - k);
      if (remaining[entries[donor].instance] < 2) continue;
      --remaining[entries[donor].instance];
      ++remaining[n];
      std::swap(entries[restore], entries[donor]);
      break;
    }
  }

  Dataset out = d;
  for (std::size_t i = 0; i < k; ++i) {
    out.instances[entries[i].instance].grid().mark_missing(entries[i].channel, entries[i].position);
  }
  return out;
}

Split train_test_split(const Dataset& d, double test_fraction, bool stratify, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  const std::size_t n = d.size();
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
  Rng rng = make_rng(seed, {0x73706c6974ULL});
  std::vector<bool> in_test(n, false);

  if (stratify && d.task == Task::classification) {
    std::vector<std::vector<std::size_t>> by_class(d.class_count());
    for (std::size_t i = 0; i < n; ++i) by_class[d.labels[i]].push_back(i);
    std::vector<std::size_t> quota(by_class.size(), 0);
    std::vector<double> frac(by_class.size(), -1.0);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      shuffle_indices(by_class[c], rng);
      if (by_class[c].size() == 1) {
        log_warning("class '" + d.class_names[c] + "' has a single instance; it stays in the training split");
        continue;
      }
      const double exact = test_fraction * static_cast<double>(by_class[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      frac[c] = exact - std::floor(exact);
      assigned += quota[c];
    }
    std::vector<std::size_t> order(by_class.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t c : order) {
      if (assigned >= n_test) break;
      if (frac[c] < 0.0 || quota[c] + 1 >= by_class[c].size()) continue;
      ++quota[c];
      ++assigned;
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      for (std::size_t k = 0; k < quota[c]; ++k) in_test[by_class[c][k]] = true;
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle_indices(order, rng);
    for (std::size_t k = 0; k < n_test; ++k) in_test[order[k]] = true;
  }

  Split s;
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? s.test_indices : s.train_indices).push_back(i);
  s.train = d.subset(s.train_indices);
  s.test = d.subset(s.test_indices);
  return s;
}

void standardize(Dataset& d, const Dataset& fit_on) {
  if (d.kind == PayloadKind::graph) throw DataError("cannot standardize graph payloads");
  const std::size_t p = fit_on.feature_count();
  for (std::size_t j = 0; j < p; ++j) {
    if (fit_on.categorical[j]) continue;
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (const auto& inst : fit_on.instances) {
      for (double v : inst.grid().channel(j)) {
        if (std::isnan(v)) continue;
        sum += v;
        sum_sq += v * v;
        ++count;
      }
    }
    if (count == 0) continue;
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean);
    const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
    for (auto& inst : d.instances) {
      Grid& g = inst.grid();
      for (std::size_t t = 0; t < g.length(); ++t) {
        double& v = g.at(j, t);
        if (!std::isnan(v)) v = (v - mean) / scale;
      }
    }
  }
}

void align_labels(Dataset& d, const std::vector<std::string>& class_names) {
  if (d.task != Task::classification || d.class_names == class_names) return;
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < class_names.size(); ++c) index.emplace(class_names[c], static_cast<int>(c));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::string& name = d.class_names[static_cast<std::size_t>(d.labels[i])];
    auto it = index.find(name);
    if (it == index.end()) {
      throw DataError("instance " + d.instances[i].id + " has class '" + name + "' unknown to the model");
    }
    d.labels[i] = it->second;
  }
  d.class_names = class_names;
}

}  // namespace proxforest

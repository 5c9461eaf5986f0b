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
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "proxforest/error.hpp"
#include "proxforest/forest.hpp"
#include "proxforest/hash.hpp"

namespace proxforest {
namespace {

using nlohmann::json;

Task parse_task(const std::string& s) {
  if (s == "classification") return Task::classification;
  if (s == "regression") return Task::regression;
  throw FormatError("unknown task '" + s + "'");
}

PayloadKind parse_kind(const std::string& s) {
  if (s == "vector") return PayloadKind::vector;
  if (s == "series") return PayloadKind::series;
  if (s == "graph") return PayloadKind::graph;
  throw FormatError("unknown payload kind '" + s + "'");
}

json table_to_json(const PredictionTable& t) {
  json j;
  j["form"] = std::string(to_string(t.form()));
  j["columns"] = t.columns();
  json rows = json::array();
  for (const auto& id : t.ids()) {
    if (t.form() == PredictionTable::Form::label) {
      rows.push_back({id, t.label(id)});
    } else {
      const auto p = t.probabilities(id);
      rows.push_back({id, std::vector<double>(p.begin(), p.end())});
    }
  }
  j["rows"] = std::move(rows);
  return j;
}

PredictionTable table_from_json(const json& j) {
  PredictionTable t;
  const std::string form = j.at("form");
  if (form == "probability") t.set_columns(j.at("columns").get<std::vector<std::string>>());
  for (const auto& row : j.at("rows")) {
    if (form == "label") {
      t.add_label(row.at(0).get<std::string>(), row.at(1).get<std::string>());
    } else {
      t.add_probabilities(row.at(0).get<std::string>(), row.at(1).get<std::vector<double>>());
    }
  }
  return t;
}

json spec_to_json(const DistanceSpec& s) {
  json j;
  j["name"] = s.name;
  j["params"] = s.params;
  if (s.table) j["table"] = table_to_json(*s.table);
  return j;
}

DistanceSpec spec_from_json(const json& j) {
  DistanceSpec s;
  s.name = j.at("name");
  s.params = j.at("params").get<std::map<std::string, std::string>>();
  if (j.contains("table")) s.table = std::make_shared<const PredictionTable>(table_from_json(j.at("table")));
  return s;
}

json config_to_json(const ForestConfig& c) {
  json j;
  j["n_trees"] = c.n_trees;
  j["r"] = c.candidates;
  json d = json::array();
  for (const auto& s : c.distances) d.push_back(spec_to_json(s));
  j["distances"] = std::move(d);
  j["distance_choice"] = std::string(to_string(c.distance_choice));
  j["task"] = std::string(to_string(c.task));
  j["purity"] = std::string(to_string(c.purity));
  j["max_depth"] = c.max_depth ? json(*c.max_depth) : json(nullptr);
  j["min_leaf"] = c.min_leaf;
  j["seed"] = c.seed;
  return j;
}

ForestConfig config_from_json(const json& j) {
  ForestConfig c;
  c.n_trees = j.at("n_trees");
  c.candidates = j.at("r");
  for (const auto& s : j.at("distances")) c.distances.push_back(spec_from_json(s));
  c.distance_choice = parse_distance_choice(j.at("distance_choice").get<std::string>());
  c.task = parse_task(j.at("task"));
  c.purity = parse_purity(j.at("purity").get<std::string>());
  if (!j.at("max_depth").is_null()) c.max_depth = j.at("max_depth").get<std::size_t>();
  c.min_leaf = j.at("min_leaf");
  c.seed = j.at("seed");
  return c;
}

json grid_to_json(const Grid& g) {
  json values = json::array();
  std::vector<std::size_t> mask;
  for (std::size_t j = 0; j < g.channels(); ++j) {
    for (std::size_t t = 0; t < g.length(); ++t) {
      const double v = g.at(j, t);
      values.push_back(std::isnan(v) ? json(nullptr) : json(v));
      if (g.is_missing(j, t)) mask.push_back(j * g.length() + t);
    }
  }
  return {{"channels", g.channels()}, {"length", g.length()}, {"values", std::move(values)}, {"missing", mask}};
}

Grid grid_from_json(const json& j) {
  const std::size_t channels = j.at("channels");
  const std::size_t length = j.at("length");
  const auto& values = j.at("values");
  if (values.size() != channels * length) throw FormatError("model: grid value count mismatch");
  Grid g(channels, length);
  for (std::size_t k : j.at("missing").get<std::vector<std::size_t>>()) {
    if (k >= channels * length) throw FormatError("model: mask index out of range");
    g.mark_missing(k / length, k % length);
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    g.values()[k] = values[k].is_null() ? kMissing : values[k].get<double>();
  }
  return g;
}

json dataset_to_json(const Dataset& d) {
  json j;
  j["task"] = std::string(to_string(d.task));
  j["kind"] = std::string(to_string(d.kind));
  j["class_names"] = d.class_names;
  j["feature_names"] = d.feature_names;
  j["categorical"] = d.categorical;
  j["label_name"] = d.label_name;
  j["label_column"] = d.label_column;
  if (!d.id_name.empty()) j["id_name"] = d.id_name;
  j["labels"] = d.labels;
  j["responses"] = d.responses;
  json inst = json::array();
  for (const auto& x : d.instances) {
    json r;
    r["id"] = x.id;
    if (x.is_graph()) {
      const Graph& g = x.graph();
      r["nodes"] = std::vector<std::int64_t>(g.labels().begin(), g.labels().end());
      json edges = json::array();
      for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
      r["edges"] = std::move(edges);
    } else {
      r["grid"] = grid_to_json(x.grid());
    }
    inst.push_back(std::move(r));
  }
  j["instances"] = std::move(inst);
  return j;
}

Dataset dataset_from_json(const json& j) {
  Dataset d;
  d.task = parse_task(j.at("task"));
  d.kind = parse_kind(j.at("kind"));
  d.class_names = j.at("class_names").get<std::vector<std::string>>();
  d.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  d.categorical = j.at("categorical").get<std::vector<bool>>();
  d.label_name = j.at("label_name");
  d.label_column = j.at("label_column");
  d.id_name = j.value("id_name", "");
  d.labels = j.at("labels").get<std::vector<int>>();
  d.responses = j.at("responses").get<std::vector<double>>();
  for (const auto& r : j.at("instances")) {
    Instance x;
    x.id = r.at("id");
    if (r.contains("grid")) {
      x.payload = grid_from_json(r.at("grid"));
    } else {
      x.payload = Graph(r.at("nodes").get<std::vector<std::int64_t>>(),
                        r.at("edges").get<std::vector<std::pair<std::uint32_t, std::uint32_t>>>());
    }
    d.instances.push_back(std::move(x));
  }
  validate(d);
  return d;
}

json tree_to_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    if (n.is_leaf()) {
      nodes.push_back({{"depth", n.depth},
                       {"reason", std::string(to_string(n.reason))},
                       {"members", n.members},
                       {"counts", n.counts}});
    } else {
      nodes.push_back(
          {{"depth", n.depth}, {"distance", n.distance}, {"exemplars", n.exemplars}, {"children", n.children}});
    }
  }
  return {{"multiplicity", t.multiplicity}, {"nodes", std::move(nodes)}};
}

LeafReason parse_reason(const std::string& s) {
  for (auto r : {LeafReason::pure, LeafReason::min_leaf, LeafReason::max_depth, LeafReason::no_progress}) {
    if (to_string(r) == s) return r;
  }
  throw FormatError("model: unknown leaf reason '" + s + "'");
}

Tree tree_from_json(const json& j, const Dataset& train, std::size_t n_distances) {
  Tree t;
  t.multiplicity = j.at("multiplicity").get<std::vector<std::uint32_t>>();
  if (t.multiplicity.size() != train.size()) throw FormatError("model: multiplicity length mismatch");
  const std::size_t n_nodes = j.at("nodes").size();
  for (const auto& r : j.at("nodes")) {
    TreeNode n;
    n.depth = r.at("depth");
    if (r.contains("children")) {
      n.distance = r.at("distance");
      n.exemplars = r.at("exemplars").get<std::vector<std::uint32_t>>();
      n.children = r.at("children").get<std::vector<std::uint32_t>>();
      if (n.distance >= n_distances || n.exemplars.size() != n.children.size() || n.children.size() < 2) {
        throw FormatError("model: malformed internal node");
      }
      for (auto e : n.exemplars) {
        if (e >= train.size()) throw FormatError("model: exemplar out of range");
      }
      for (auto c : n.children) {
        if (c >= n_nodes) throw FormatError("model: child out of range");
      }
    } else {
      n.reason = parse_reason(r.at("reason"));
      n.members = r.at("members").get<std::vector<std::uint32_t>>();
      n.counts = r.at("counts").get<std::vector<std::uint32_t>>();
      if (n.members.size() != n.counts.size() || n.members.empty()) throw FormatError("model: malformed leaf");
      for (auto m : n.members) {
        if (m >= train.size()) throw FormatError("model: leaf member out of range");
      }
      summarize_leaf(n, train);
    }
    t.nodes.push_back(std::move(n));
  }
  if (t.nodes.empty()) throw FormatError("model: tree without nodes");
  return t;
}

}  // namespace

std::string Forest::serialize() const {
  json payload;
  payload["config"] = config_to_json(cfg_);
  payload["training"] = dataset_to_json(*train_);
  json trees = json::array();
  for (const auto& t : trees_) trees.push_back(tree_to_json(t));
  payload["trees"] = std::move(trees);
  const std::string body = payload.dump();
  json header;
  header["format"] = kFormat;
  header["version"] = std::to_string(kVersionMajor) + "." + std::to_string(kVersionMinor);
  header["bytes"] = body.size();
  header["sha256"] = sha256_hex(body);
  return header.dump() + "\n" + body + "\n";
}

Forest Forest::deserialize(const std::string& text) {
  const auto nl = text.find('\n');
  if (nl == std::string::npos) throw ChecksumError("model file is truncated (no payload)");
  json header;
  try {
    header = json::parse(text.substr(0, nl));
  } catch (const json::exception&) {
    if (text.substr(0, nl).find(kFormat) == std::string::npos) throw FormatError("not a proxforest model file");
    throw ChecksumError("model header is corrupt or truncated");
  }
  if (!header.is_object() || header.value("format", "") != kFormat) throw FormatError("not a proxforest model file");
  const std::string version = header.value("version", "");
  int major = -1;
  auto [end, ec] = std::from_chars(version.data(), version.data() + version.size(), major);
  if (ec != std::errc() || end == version.data() + version.size() || *end != '.') {
    throw FormatError("model version '" + version + "' is malformed");
  }
  if (major != kVersionMajor) {
    throw VersionError("model format version " + version + " is not supported (expected " +
                       std::to_string(kVersionMajor) + ".x)");
  }
  std::string body = text.substr(nl + 1);
  if (!body.empty() && body.back() == '\n') body.pop_back();
  if (body.size() != header.value("bytes", std::size_t{0}) || sha256_hex(body) != header.value("sha256", "")) {
    throw ChecksumError("model payload fails its checksum (truncated or modified)");
  }
  Forest f;
  try {
    const json payload = json::parse(body);
    f.cfg_ = config_from_json(payload.at("config"));
    f.train_ = std::make_shared<const Dataset>(dataset_from_json(payload.at("training")));
    for (const auto& t : payload.at("trees")) f.trees_.push_back(tree_from_json(t, *f.train_, f.cfg_.distances.size()));
  } catch (const json::exception& e) {
    throw FormatError(std::string("model payload is malformed: ") + e.what());
  }
  if (f.trees_.size() != f.cfg_.n_trees) throw FormatError("model: tree count differs from config");
  f.cfg_.validate();
  f.resolve_distances();
  f.finish_leaf_index();
  return f;
}

void Forest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize();
  if (!out) throw DataError("write failed: " + path.string());
}

Forest Forest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace proxforest

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
#include "proxforest/prediction_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "proxforest/csv.hpp"
#include "proxforest/error.hpp"

namespace proxforest {

std::string_view to_string(PredictionTable::Form form) {
  switch (form) {
    case PredictionTable::Form::empty:
      return "empty";
    case PredictionTable::Form::label:
      return "label";
    case PredictionTable::Form::probability:
      return "probability";
  }
  return "unknown";
}

std::size_t PredictionTable::slot(const std::string& id, Form expected) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("instance '" + id + "' has no entry in the prediction table");
  if (form_ != expected) {
    throw LookupError("prediction table holds " + std::string(to_string(form_)) + " rows, " +
                      std::string(to_string(expected)) + " rows requested");
  }
  return it->second;
}

const std::string& PredictionTable::label(const std::string& id) const {
  return labels_[slot(id, Form::label)];
}

std::span<const double> PredictionTable::probabilities(const std::string& id) const {
  const std::size_t s = slot(id, Form::probability);
  return std::span<const double>(probs_).subspan(s * width(), width());
}

void PredictionTable::add_label(const std::string& id, std::string label) {
  if (form_ == Form::probability) throw DataError("cannot mix label and probability rows");
  if (index_.count(id)) throw DataError("duplicate id '" + id + "' in prediction table");
  form_ = Form::label;
  index_.emplace(id, labels_.size());
  ids_.push_back(id);
  labels_.push_back(std::move(label));
}

void PredictionTable::set_columns(std::vector<std::string> columns) {
  if (!index_.empty()) throw DataError("prediction table columns must be set before rows are added");
  columns_ = std::move(columns);
}

void PredictionTable::add_probabilities(const std::string& id, std::vector<double> row) {
  if (form_ == Form::label) throw DataError("cannot mix label and probability rows");
  if (index_.count(id)) throw DataError("duplicate id '" + id + "' in prediction table");
  if (columns_.empty()) {
    for (std::size_t c = 0; c < row.size(); ++c) columns_.push_back("p" + std::to_string(c));
  }
  if (row.size() != width()) {
    throw DataError("probability row for '" + id + "' has " + std::to_string(row.size()) + " entries, expected " +
                    std::to_string(width()));
  }
  for (double v : row) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("probability row for '" + id + "' has a negative or non-finite entry");
  }
  const double sum = std::accumulate(row.begin(), row.end(), 0.0);
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw DataError("probability row for '" + id + "' sums to " + csv::format_double(sum) + ", not 1");
  }
  form_ = Form::probability;
  index_.emplace(id, ids_.size());
  ids_.push_back(id);
  probs_.insert(probs_.end(), row.begin(), row.end());
}

void PredictionTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  if (form_ == Form::empty) return;
  if (form_ == Form::label) {
    csv::write_row(out, {"id", "label"});
    for (std::size_t i = 0; i < ids_.size(); ++i) csv::write_row(out, {ids_[i], labels_[i]});
    return;
  }
  std::vector<std::string> header{"id"};
  header.insert(header.end(), columns_.begin(), columns_.end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    std::vector<std::string> row{ids_[i]};
    for (std::size_t c = 0; c < width(); ++c) row.push_back(csv::format_double(probs_[i * width() + c]));
    csv::write_row(out, row);
  }
}

PredictionTable load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const auto rows = csv::read_rows(in);
  PredictionTable table;
  if (rows.empty()) return table;
  const auto& header = rows.front();
  if (header.size() < 2 || header[0] != "id") {
    throw FormatError(path.string() + ": header must be 'id,label' or 'id,<class>,...'");
  }
  const bool label_form = header.size() == 2 && header[1] == "label";
  if (!label_form) table.set_columns(std::vector<std::string>(header.begin() + 1, header.end()));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = path.string() + " row " + std::to_string(r);
    if (row.size() != header.size()) throw FormatError(where + ": field count differs from header");
    if (label_form) {
      table.add_label(row[0], row[1]);
      continue;
    }
    std::vector<double> probs;
    for (std::size_t c = 1; c < row.size(); ++c) {
      double v = 0.0;
      const auto res = std::from_chars(row[c].data(), row[c].data() + row[c].size(), v);
      if (res.ec != std::errc() || res.ptr != row[c].data() + row[c].size()) {
        throw FormatError(where + ": non-numeric probability '" + row[c] + "'");
      }
      probs.push_back(v);
    }
    table.add_probabilities(row[0], std::move(probs));
  }
  return table;
}

}  // namespace proxforest

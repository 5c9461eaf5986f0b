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

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace proxforest {

/// Outputs of an external pretrained classifier keyed by instance id: either
/// one predicted label per id, or one probability row per id.
class PredictionTable {
 public:
  enum class Form { empty, label, probability };

  static constexpr double kRowSumTolerance = 1e-6;

  PredictionTable() = default;

  Form form() const { return form_; }
  std::size_t size() const { return index_.size(); }
  bool empty() const { return index_.empty(); }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  /// Column names of a probability table (class names), in file order.
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t width() const { return columns_.size(); }

  /// Throws LookupError for unknown ids or a form mismatch.
  const std::string& label(const std::string& id) const;
  std::span<const double> probabilities(const std::string& id) const;

  /// Throws DataError on id collision or a row that is not a distribution.
  void add_label(const std::string& id, std::string label);
  void add_probabilities(const std::string& id, std::vector<double> row);
  void set_columns(std::vector<std::string> columns);

  /// Ids in insertion order.
  const std::vector<std::string>& ids() const { return ids_; }

  void write(const std::filesystem::path& path) const;

 private:
  std::size_t slot(const std::string& id, Form expected) const;

  Form form_ = Form::empty;
  std::vector<std::string> columns_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> labels_;
  std::vector<double> probs_;  // row-major, width() per row
};

std::string_view to_string(PredictionTable::Form form);

/// CSV with header `id,label` (label form) or `id,<class>,<class>,...` (two or
/// more probability columns). An empty file yields an empty table.
PredictionTable load_predictions(const std::filesystem::path& path);

}  // namespace proxforest

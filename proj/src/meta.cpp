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
#include "proxforest/meta.hpp"

#include <cmath>
#include <string>

#include "proxforest/error.hpp"

namespace proxforest {

double meta_class_distance(const Instance& x, const Instance& y, const PredictionTable& table) {
  return table.label(x.id) == table.label(y.id) ? 0.0 : 1.0;
}

double meta_prob_distance(const Instance& x, const Instance& y, const PredictionTable& table) {
  const auto a = table.probabilities(x.id);
  const auto b = table.probabilities(y.id);
  if (a.size() != b.size()) throw DataError("meta_prob: probability rows differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

ForestConfig attach_meta_distance(ForestConfig cfg, std::shared_ptr<const PredictionTable> table, MetaForm form,
                                  const Dataset& training) {
  if (!table || table->empty()) throw DataError("meta distance: prediction table is empty");
  const auto expected = form == MetaForm::label ? PredictionTable::Form::label : PredictionTable::Form::probability;
  if (table->form() != expected) {
    throw DataError("meta distance: table holds " + std::string(to_string(table->form())) + " rows, expected " +
                    std::string(to_string(expected)));
  }
  if (form == MetaForm::probability && table->width() < 2) {
    throw DataError("meta_prob: a probability table needs at least two classes");
  }
  std::string missing;
  std::size_t n_missing = 0;
  for (const auto& inst : training.instances) {
    if (table->contains(inst.id)) continue;
    if (n_missing++ < 10) missing += (missing.empty() ? "" : ", ") + inst.id;
  }
  if (n_missing > 0) {
    if (n_missing > 10) missing += ", ...";
    throw DataError("meta distance: " + std::to_string(n_missing) + " training ids missing from the prediction table: " +
                    missing);
  }
  DistanceSpec spec;
  spec.name = form == MetaForm::label ? "meta_class" : "meta_prob";
  spec.table = std::move(table);
  cfg.distances.push_back(std::move(spec));
  return cfg;
}

}  // namespace proxforest

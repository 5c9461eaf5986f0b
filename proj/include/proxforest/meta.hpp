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

#include <memory>

#include "proxforest/dataset.hpp"
#include "proxforest/forest.hpp"
#include "proxforest/prediction_table.hpp"

namespace proxforest {

enum class MetaForm { label, probability };

/// 0 when the table assigns both ids the same label, 1 otherwise. Throws
/// LookupError for ids absent from the table.
double meta_class_distance(const Instance& x, const Instance& y, const PredictionTable& table);

/// Euclidean distance between the probability rows of x and y.
double meta_prob_distance(const Instance& x, const Instance& y, const PredictionTable& table);

/// Appends the meta distance backed by `table` to `cfg.distances`. The table
/// must cover every id in `training` (missing ids are listed in the error) and
/// a probability table needs at least two columns.
ForestConfig attach_meta_distance(ForestConfig cfg, std::shared_ptr<const PredictionTable> table, MetaForm form,
                                  const Dataset& training);

}  // namespace proxforest

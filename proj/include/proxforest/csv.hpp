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

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace proxforest::csv {

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and line
/// breaks. Accepts LF or CRLF line endings; a UTF-8 BOM is skipped. Blank
/// lines are ignored.
std::vector<std::vector<std::string>> read_rows(std::istream& in);

/// Quotes a field when it contains a comma, quote or line break.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace proxforest::csv

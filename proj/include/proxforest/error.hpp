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

#include <stdexcept>
#include <string>

namespace proxforest {

/// Base class for every error raised by the library. `category()` drives the
/// CLI exit code.
class Error : public std::runtime_error {
 public:
  enum class Category { usage, data, internal };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

/// Invalid configuration or parameters.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::usage, what) {}
};

/// Malformed input file.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(Category::data, what) {}
};

/// Well-formed input that violates a semantic precondition.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::data, what) {}
};

/// Id lookup in a prediction table failed.
class LookupError : public Error {
 public:
  explicit LookupError(const std::string& what) : Error(Category::data, what) {}
};

/// Model file failed its integrity check (truncation, corruption).
class ChecksumError : public Error {
 public:
  explicit ChecksumError(const std::string& what) : Error(Category::data, what) {}
};

/// Model file written by an incompatible format version.
class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what) : Error(Category::data, what) {}
};

}  // namespace proxforest

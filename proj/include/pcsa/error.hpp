// Copyright 2026 The pcsa Authors
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

namespace pcsa {

// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument: wrong dimensions, out-of-range counts, broken preconditions.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (scan records, config documents, tensor bundles).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Config document violates its schema; `path()` is a JSON pointer to the field.
class ConfigError : public FormatError {
 public:
  ConfigError(std::string path, const std::string& what)
      : FormatError(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcsa

// Copyright 2026 The rte-snn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RTE_ERROR_HPP_
#define RTE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace rte {

// Root of every exception thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed external file contents (bad magic, unknown header, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Two inputs that must agree do not (e.g. image count vs label count).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written, or ended early.
class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration. Carries the offending key and, when the value
// came from a file, its 1-based line number (0 otherwise).
class ConfigError : public Error {
 public:
  ConfigError(std::string key, int line, const std::string& message)
      : Error(format(key, line, message)), key_(std::move(key)), line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& key, int line,
                            const std::string& message) {
    std::string out = "config error";
    if (!key.empty()) out += " [" + key + "]";
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    return out + ": " + message;
  }

  std::string key_;
  int line_;
};

#define RTE_REQUIRE(cond, msg)                  \
  do {                                          \
    if (!(cond)) throw ::rte::ContractError(msg); \
  } while (false)

}  // namespace rte

#endif  // RTE_ERROR_HPP_

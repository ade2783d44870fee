// Copyright 2026 The ReOT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REOT_ERRORS_HPP_
#define REOT_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reot {

// Bad shapes, out-of-range labels, negative weights and the like.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A hard-marginal row that has no unblocked entry.
class InfeasibleRow : public std::runtime_error {
 public:
  explicit InfeasibleRow(std::size_t row)
      : std::runtime_error("row " + std::to_string(row) +
                           " has every entry blocked by the mask"),
        row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// A plan whose total mass is not 1 was handed to the score function.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation declined on an otherwise well-formed request (instance too
// large for the oracle, non-finite gradient, geometry not realizable...).
class Refused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace reot

#endif  // REOT_ERRORS_HPP_

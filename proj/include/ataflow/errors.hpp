// Copyright 2026 The ataflow Authors
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

#ifndef ATAFLOW_ERRORS_HPP
#define ATAFLOW_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ataflow {

// A non-finite value or partial appeared while recording or evaluating.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t node)
      : std::runtime_error(what), node_(node) {}
  explicit NumericError(const std::string& what)
      : std::runtime_error(what), node_(static_cast<std::size_t>(-1)) {}

  // Tape node that produced the value, or size_t(-1) outside a tape.
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

// Argument outside the mathematical domain of a density or bijection.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller misuse: bad ids, mismatched shapes, unknown names.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Not enough (positive, finite) samples for an estimator.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ataflow

#endif  // ATAFLOW_ERRORS_HPP

// Copyright 2026 The contradial Authors.
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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace contradial {

/// Root of every error the toolkit throws. `kind()` is a stable identifier
/// used in reports and HTTP error bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Bad configuration or usage. The CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

#define CONTRADIAL_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(#Name, what) {}      \
  };

// corpus
CONTRADIAL_DEFINE_ERROR(DuplicateId)
CONTRADIAL_DEFINE_ERROR(InvariantViolation)
CONTRADIAL_DEFINE_ERROR(DegenerateSplit)
// prompts
CONTRADIAL_DEFINE_ERROR(DemoCountMismatch)
CONTRADIAL_DEFINE_ERROR(NotContradictory)
// backends
CONTRADIAL_DEFINE_ERROR(TransportError)
CONTRADIAL_DEFINE_ERROR(ProtocolError)
CONTRADIAL_DEFINE_ERROR(ScriptMiss)
// metrics and scoring
CONTRADIAL_DEFINE_ERROR(EmptyEvaluation)
CONTRADIAL_DEFINE_ERROR(LengthMismatch)
CONTRADIAL_DEFINE_ERROR(EmptyInput)
CONTRADIAL_DEFINE_ERROR(EmptyReference)
CONTRADIAL_DEFINE_ERROR(EmptyScores)
CONTRADIAL_DEFINE_ERROR(NoInvalidPoints)
CONTRADIAL_DEFINE_ERROR(EmptyGrid)
// collection
CONTRADIAL_DEFINE_ERROR(MalformedTopicLine)
CONTRADIAL_DEFINE_ERROR(BudgetExhausted)
CONTRADIAL_DEFINE_ERROR(ParseFailure)
// annotation
CONTRADIAL_DEFINE_ERROR(InsufficientAnnotators)
CONTRADIAL_DEFINE_ERROR(NotAssigned)
CONTRADIAL_DEFINE_ERROR(NoCompleteItems)
CONTRADIAL_DEFINE_ERROR(NoScoredItems)
CONTRADIAL_DEFINE_ERROR(UnknownItem)

#undef CONTRADIAL_DEFINE_ERROR

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& cause)
      : Error("MalformedLine",
              "line " + std::to_string(line_no) + ": " + cause),
        line_no_(line_no) {}

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class RemoteScorerFailure : public Error {
 public:
  RemoteScorerFailure(std::string slot, const std::string& cause)
      : Error("RemoteScorerFailure", slot + ": " + cause),
        slot_(std::move(slot)) {}

  const std::string& slot() const noexcept { return slot_; }

 private:
  std::string slot_;
};

class OutOfRange : public Error {
 public:
  explicit OutOfRange(std::string criterion)
      : Error("OutOfRange", "criterion out of range: " + criterion),
        criterion_(std::move(criterion)) {}

  const std::string& criterion() const noexcept { return criterion_; }

 private:
  std::string criterion_;
};

}  // namespace contradial

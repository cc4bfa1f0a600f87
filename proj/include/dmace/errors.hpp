// Copyright 2026 The dmace Authors
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

#ifndef DMACE_ERRORS_HPP
#define DMACE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dmace {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad shapes, out-of-range indices, unknown enum values.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// I - Phi*Gamma (or a similar system) is numerically singular.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double condition, long config_index = -1)
      : Error(what), condition_(condition), config_index_(config_index) {}

  double condition() const noexcept { return condition_; }
  // -1 when the failure is not tied to a particular configuration.
  long config_index() const noexcept { return config_index_; }

 private:
  double condition_;
  long config_index_;
};

// Too few training configurations, or the LS design matrix lost rank.
class IdentifiabilityError : public Error {
 public:
  IdentifiabilityError(const std::string& what, long k_used, long k_min)
      : Error(what), k_used_(k_used), k_min_(k_min) {}

  long k_used() const noexcept { return k_used_; }
  long k_min() const noexcept { return k_min_; }

 private:
  long k_used_;
  long k_min_;
};

// Numerical rank below what the solve requires.
class RankError : public IdentifiabilityError {
 public:
  RankError(const std::string& what, long rank, long required, long k_used, long k_min)
      : IdentifiabilityError(what, k_used, k_min), rank_(rank), required_(required) {}

  long rank() const noexcept { return rank_; }
  long required() const noexcept { return required_; }

 private:
  long rank_;
  long required_;
};

// Input violates a structural assumption of the method (symmetry, block layout).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Cost became NaN or infinite during iteration.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Metric or alignment evaluated on all-zero data.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A channel the chosen problem type treats as known is not available.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what), byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class VersionError : public Error {
 public:
  VersionError(const std::string& what, int found, int expected)
      : Error(what), found_(found), expected_(expected) {}

  int found() const noexcept { return found_; }
  int expected() const noexcept { return expected_; }

 private:
  int found_;
  int expected_;
};

}  // namespace dmace

#endif  // DMACE_ERRORS_HPP

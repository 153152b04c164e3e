// Copyright 2026 The det9 Authors
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

namespace det9 {

/// Base class for all det9 errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input syntax (bad JSON, wrong value shape). Message carries
/// the position reported by the underlying parser.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a documented invariant. Message names
/// the offending file, frame, and field.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure (unreadable input, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Annotation comparison found no common instances.
class EmptyComparisonError : public Error {
 public:
  using Error::Error;
};

/// Instance exceeds the size limit of the exhaustive reference evaluator.
class OracleBoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace det9

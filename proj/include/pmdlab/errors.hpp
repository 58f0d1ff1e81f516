// Copyright 2026 The pmdlab Authors.
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

namespace pmdlab {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violated a documented precondition (invalid distribution,
/// out-of-range action, shape mismatch).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is invalid (bad environment size, empty grid...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A non-finite loss or gradient was produced.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An API was used out of order, e.g. stepping a finished episode.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A report or aggregate was requested over data with missing cells.
class IncompleteDataError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument lies outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A least-squares system is rank deficient.
class RankError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing persisted sweep artifacts failed.
class StorageError : public Error {
 public:
  using Error::Error;
};

/// A (config, env, seed) row was appended twice.
class DuplicateRecordError : public StorageError {
 public:
  using StorageError::StorageError;
};

}  // namespace pmdlab

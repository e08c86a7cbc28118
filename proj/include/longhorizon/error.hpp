/*
 * Copyright 2026 The LongHorizon Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LONGHORIZON_ERROR_HPP_
#define LONGHORIZON_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace longhorizon {

// Root of the library's exception hierarchy. The CLI maps each branch onto an
// exit code: ArgumentError -> 2, DataError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or configuration value.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Column set or column kinds do not match what an operation expects.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// A design probability that must be strictly positive is not.
class PositivityError : public DataError {
 public:
  using DataError::DataError;
};

// Estimation failed numerically (no overlap, singular fit, all replicates
// dropped, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace longhorizon

#endif  // LONGHORIZON_ERROR_HPP_

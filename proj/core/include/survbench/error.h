/*
 * Copyright 2026 The survbench Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace survbench {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad files, wrong dimensions, values outside their domain.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Input is well formed but carries no usable information for the requested
// computation (no events, no comparable pairs, constant column, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// An iterative fit failed: divergence, singular information, no convergence.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace survbench
